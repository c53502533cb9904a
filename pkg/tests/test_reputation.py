import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from byzinf.attack import optimal_attack
from byzinf.fusion import NetworkConfig
from byzinf.metrics import DetectionScenario, EstimationScenario
from byzinf.model import GaussianObservationModel, make_uniform_quantizer
from byzinf.reputation import (
    BYZANTINE_TAG,
    HONEST_TAG,
    UNTAGGED,
    EstimationFusion,
    NodeType,
    PointPrior,
    ReputationState,
    TypeConditionalModel,
    UniformPrior,
    asymptotic_threshold,
    closed_form_n5,
    deviation,
    deviation_moments,
    linear_combination_moments,
    marginal_type_conditional_pmf,
    midpoint_threshold,
    raw_moments,
    run_identification,
    sample_deviations,
    tag,
    type_conditional_pmf,
)

# brute-force enumeration over all M**N symbol tuples, mpmath at 40 digits:
# (N, M, A, sigma, theta, alpha, type, divisor) -> (mean, variance)
ENUMERATED = [
    ((3, 2, 2.0, 1.0, 0.4, 0.3, "H", 3), (0.65829261517473539, 0.44093881140167287)),
    ((4, 3, 1.0, 0.7, 0.1, 0.5, "B", 4), (2.384565125535034, 3.1105274874911669)),
    ((3, 4, 2.0, 1.0, 0.0, 0.5, "H", 4), (1.3922511875336129, 3.3132102639388653)),
]
# M = 3, A = 2, sigma = 1, no attack, theta ~ U[0, 1]
MARGINAL_M3 = [0.008108548299781914, 0.91706668372936143, 0.074824767970856661]


def _model(N, M, alpha, A=2.0, sigma=1.0, prior=UniformPrior()):
    q = make_uniform_quantizer(M, A)
    return TypeConditionalModel(N, alpha, optimal_attack(M), q, GaussianObservationModel.location(sigma), prior)


def test_deviation_and_tag():
    q = make_uniform_quantizer(4, 2.0)
    assert deviation(4, 1.0, q) == 4.0
    assert deviation(1, 0.5, q, f=lambda t: 2 * t) == 16.0
    assert tag(1.0, 1.0) is NodeType.HONEST
    assert tag(np.nextafter(1.0, 2.0), 1.0) is NodeType.BYZANTINE


def test_reputation_state():
    st_ = ReputationState(3)
    st_.update(0, 2.0).update(0, 4.0).update(1, 0.5)
    np.testing.assert_array_equal(st_.reputation[:2], [3.0, 0.5])
    assert np.isnan(st_.reputation[2])
    np.testing.assert_array_equal(st_.retag(1.0), [BYZANTINE_TAG, HONEST_TAG, UNTAGGED])
    with pytest.raises(ValueError):
        st_.update(0, -1.0)


def test_pi_bounds():
    m = _model(5, 4, 0.2)
    assert m.pi_bh == pytest.approx(0.25)
    assert m.pi_bb == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError, match="pi_BH"):
        _ = _model(5, 4, 0.9).pi_bh
    with pytest.raises(ValueError, match="pi_BB"):
        _ = _model(5, 4, 0.1).pi_bb


def test_type_conditional_pmf_mixture():
    m = _model(5, 2, 0.4, prior=PointPrior(0.0))
    other = np.asarray(type_conditional_pmf(m, 1, 0, "H", 0.3))
    own = np.asarray(type_conditional_pmf(m, 0, 0, "H", 0.3))
    flipped = own[::-1]
    np.testing.assert_allclose(other, 0.5 * own + 0.5 * flipped, atol=1e-15)


def test_marginal_pmf_oracle():
    m = _model(5, 3, 0.0)
    np.testing.assert_allclose(np.asarray(marginal_type_conditional_pmf(m, 0, 0, "H")), MARGINAL_M3, atol=1e-10)


def test_linear_combination_moments_difference():
    # independent X ~ U{-1, 1}, Y ~ U{-1, 1}: (X - Y) takes -2, 0, 2 with 1/4, 1/2, 1/4
    mom = raw_moments([0.5, 0.5], [-1.0, 1.0])
    out = linear_combination_moments([1.0, -1.0], [mom, mom])
    np.testing.assert_allclose(out, [1.0, 0.0, 2.0, 0.0, 8.0], atol=1e-15)


@pytest.mark.parametrize("args, expected", ENUMERATED)
def test_deviation_moments_enumeration_oracle(args, expected):
    N, M, A, sigma, theta, alpha, typ, D = args
    m = _model(N, M, alpha, A=A, sigma=sigma, prior=PointPrior(theta))
    mean, var = deviation_moments(m, EstimationFusion(D), typ)
    assert mean == pytest.approx(expected[0], rel=1e-12)
    assert var == pytest.approx(expected[1], rel=1e-12)


@pytest.mark.parametrize("M", [2, 3, 4, 5, 6, 7])
def test_closed_form_n5_matches_engine(M):
    m = _model(5, M, 0.4)
    mu, delta = closed_form_n5(m)
    mean, var = deviation_moments(m, EstimationFusion("M"))
    assert mean == pytest.approx(mu, rel=1e-9)
    assert var + mean**2 == pytest.approx(delta, rel=1e-9)


def test_closed_form_needs_five_nodes():
    with pytest.raises(ValueError):
        closed_form_n5(_model(6, 3, 0.3))


def test_fusion_divisor():
    assert EstimationFusion().value(10, 4) == 10.0
    assert EstimationFusion("M").value(10, 4) == 4.0
    with pytest.raises(ValueError):
        EstimationFusion(0).value(10, 4)


def test_asymptotic_threshold_shape():
    m = _model(5, 4, 0.3)
    f = EstimationFusion("M")
    mean, var = deviation_moments(m, f)
    assert asymptotic_threshold(m, f, 0.5) == mean
    assert asymptotic_threshold(m, f, 0.01, T=100) < asymptotic_threshold(m, f, 0.01, T=1)
    assert asymptotic_threshold(m, f, 0.01) == pytest.approx(mean + 2.3263478740408408 * np.sqrt(var))
    with pytest.raises(ValueError):
        asymptotic_threshold(m, f, 1.0)


def test_sample_deviations_point_prior_large_network():
    # with many nodes the independence approximation is close to exact
    m = _model(60, 4, 0.2, prior=PointPrior(0.3))
    f = EstimationFusion("N")
    mean, var = deviation_moments(m, f, "H")
    d = sample_deviations(m, f, "H", 100_000, seed=3)
    assert abs(d.mean() - mean) < 4 * d.std() / np.sqrt(d.size) + 0.01 * mean


def _identification(M, kind, T=150, seed=0):
    q = make_uniform_quantizer(M, 2.0)
    if kind == "detection":
        s = DetectionScenario.gaussian(q, mu=1.0, sigma=1.0)
    else:
        s = EstimationScenario.gaussian(q, sigma=1.0, theta=0.5)
    cfg = NetworkConfig(100, 0.2, optimal_attack(M), q, seed)
    return run_identification(s, cfg, midpoint_threshold(s, cfg), T)


@pytest.mark.parametrize("kind", ["detection", "estimation"])
def test_identification_converges(kind):
    r = _identification(4, kind)
    assert r.identified[-1] == 20
    assert r.honest_mislabel[-1] == 0.0
    assert r.byzantine_mislabel[-1] == 0.0


def test_identification_is_deterministic():
    a, b = _identification(8, "detection", T=50, seed=4), _identification(8, "detection", T=50, seed=4)
    np.testing.assert_array_equal(a.tagged, b.tagged)


@settings(max_examples=30, deadline=None)
@given(
    N=st.integers(2, 8),
    M=st.integers(2, 6),
    frac=st.floats(0.0, 1.0),
    theta=st.floats(-1.0, 1.0),
)
def test_deviation_moments_valid(N, M, frac, theta):
    alpha = frac * (N - 1) / N
    m = _model(N, M, alpha, prior=PointPrior(theta))
    mean, var = deviation_moments(m, EstimationFusion("N"))
    assert mean >= 0.0 and var >= 0.0
