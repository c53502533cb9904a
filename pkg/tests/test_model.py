import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from byzinf.model import (
    GaussianObservationModel,
    SymbolPmf,
    SymbolPmfGradient,
    dequantize,
    gaussian_tail,
    gaussian_tail_inv,
    make_uniform_quantizer,
    quantize,
    symbol_pmf,
    symbol_pmf_array,
    symbol_pmf_gradient,
)

# mpmath at 40 digits
PMF_M4_THETA03 = [0.010724110021675805, 0.37136446778937156, 0.5733459594304096, 0.044565462758543039]
PMF_M5_BPSK_H0 = [0.15865525393145705, 0.44005107175146667, 0.33448647304821821, 0.063827438033803509, 0.0029797632350545568]


def test_thresholds_and_centroids():
    q = make_uniform_quantizer(4, 2.0)
    np.testing.assert_array_equal(q.thresholds, [-2.0, 0.0, 2.0])
    np.testing.assert_array_equal(q.centroids, [-3.0, -1.0, 1.0, 3.0])
    assert q.step == 2.0


def test_two_level_quantizer():
    q = make_uniform_quantizer(2, 2.0)
    np.testing.assert_array_equal(q.thresholds, [0.0])
    np.testing.assert_array_equal(q.centroids, [-1.0, 1.0])


def test_odd_quantizer_centroids():
    q = make_uniform_quantizer(5, 1.5)
    np.testing.assert_allclose(q.centroids, [-2.0, -1.0, 0.0, 1.0, 2.0], atol=1e-15)


def test_quantizer_is_read_only():
    q = make_uniform_quantizer(8, 1.0)
    with pytest.raises(ValueError):
        q.thresholds[0] = 5.0


@pytest.mark.parametrize("M, A", [(1, 1.0), (2.5, 1.0), (4, 0.0), (4, -1.0), (4, math.inf)])
def test_bad_quantizer(M, A):
    with pytest.raises(ValueError):
        make_uniform_quantizer(M, A)


def test_quantize_ties_go_low():
    q = make_uniform_quantizer(4, 2.0)
    assert quantize(q, 0.0) == 2
    assert quantize(q, np.nextafter(0.0, 1.0)) == 3
    assert quantize(q, -2.0) == 1
    assert quantize(q, 2.0) == 3
    np.testing.assert_array_equal(quantize(q, [-10.0, -1.0, 1.0, 10.0]), [1, 2, 3, 4])


def test_dequantize_range():
    q = make_uniform_quantizer(4, 2.0)
    assert dequantize(q, 4) == 3.0
    with pytest.raises(ValueError):
        dequantize(q, 0)
    with pytest.raises(ValueError):
        dequantize(q, 5)


def test_pmf_location_oracle():
    q = make_uniform_quantizer(4, 2.0)
    p = symbol_pmf(GaussianObservationModel.location(1.0), q, 0.3)
    np.testing.assert_allclose(np.asarray(p), PMF_M4_THETA03, rtol=1e-13)


def test_pmf_bpsk_oracle():
    q = make_uniform_quantizer(5, 1.5)
    p = symbol_pmf(GaussianObservationModel.bpsk(0.7, 0.8), q, 0)
    np.testing.assert_allclose(np.asarray(p), PMF_M5_BPSK_H0, rtol=1e-13)


def test_bpsk_means():
    m = GaussianObservationModel.bpsk(1.5, 1.0)
    assert m.mean(0) == -1.5 and m.mean(1) == 1.5
    with pytest.raises(ValueError):
        m.dmean(0)


def test_far_tail_pmf_stays_valid():
    q = make_uniform_quantizer(16, 2.0)
    p = np.asarray(symbol_pmf(GaussianObservationModel.location(0.01), q, 0.0))
    assert abs(p.sum() - 1.0) < 1e-12 and p.min() >= 0.0
    # the two cells adjoining 0 split the mass
    np.testing.assert_allclose(p[7:9], [0.5, 0.5], atol=1e-12)


def test_pmf_array_matches_scalar():
    q = make_uniform_quantizer(8, 1.0)
    model = GaussianObservationModel.location(0.6)
    thetas = np.array([-1.0, 0.0, 0.25, 2.0])
    arr = symbol_pmf_array(model, q, thetas)
    for k, t in enumerate(thetas):
        np.testing.assert_allclose(arr[k], np.asarray(symbol_pmf(model, q, t)), atol=1e-15)


def test_gradient_matches_finite_difference():
    q = make_uniform_quantizer(6, 1.0)
    model = GaussianObservationModel.location(0.7)
    h = 1e-6
    fd = (np.asarray(symbol_pmf(model, q, 0.2 + h)) - np.asarray(symbol_pmf(model, q, 0.2 - h))) / (2 * h)
    np.testing.assert_allclose(np.asarray(symbol_pmf_gradient(model, q, 0.2)), fd, atol=1e-8)


def test_pmf_validation():
    with pytest.raises(ValueError):
        SymbolPmf([0.5, 0.6])
    with pytest.raises(ValueError):
        SymbolPmf([-0.1, 1.1])
    with pytest.raises(ValueError):
        SymbolPmfGradient([0.1, 0.1])


def test_gaussian_tail_roundtrip():
    for p in (1e-10, 0.01, 0.3, 0.5, 0.9):
        assert gaussian_tail(gaussian_tail_inv(p)) == pytest.approx(p, rel=1e-12)
    assert gaussian_tail_inv(0.01) == pytest.approx(2.3263478740408408, rel=1e-14)
    with pytest.raises(ValueError):
        gaussian_tail_inv(0.0)


@settings(max_examples=200, deadline=None)
@given(
    M=st.integers(2, 32),
    A=st.floats(0.1, 5.0),
    sigma=st.floats(0.01, 5.0),
    theta=st.floats(-5.0, 5.0),
)
def test_pmf_is_distribution(M, A, sigma, theta):
    q = make_uniform_quantizer(M, A)
    model = GaussianObservationModel.location(sigma)
    p = np.asarray(symbol_pmf(model, q, theta))
    g = np.asarray(symbol_pmf_gradient(model, q, theta))
    assert p.min() >= 0.0 and abs(p.sum() - 1.0) <= 1e-12
    assert abs(g.sum()) <= 1e-10


@settings(max_examples=200, deadline=None)
@given(M=st.integers(2, 32), A=st.floats(0.1, 5.0), r=st.floats(-20, 20))
def test_quantize_lands_in_its_cell(M, A, r):
    q = make_uniform_quantizer(M, A)
    m = quantize(q, r)
    lo, hi = q.cell_edges[m - 1], q.cell_edges[m]
    assert 1 <= m <= M
    assert lo < r <= hi
