"""Quantization alphabet, Gaussian sensor models and per-symbol probabilities.

Symbols are indexed ``1..M`` in every public function. Internally arrays are
0-based, so ``probs[m - 1]`` is the probability of symbol ``m``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from statistics import NormalDist

import numpy as np
from scipy.special import ndtr

__all__ = [
    "UniformQuantizer",
    "GaussianObservationModel",
    "SymbolPmf",
    "SymbolPmfGradient",
    "make_uniform_quantizer",
    "quantize",
    "dequantize",
    "symbol_pmf",
    "symbol_pmf_gradient",
    "gaussian_tail",
    "gaussian_tail_inv",
    "normal_pdf",
]

PMF_TOL = 1e-12
GRAD_TOL = 1e-10

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_STD_NORMAL = NormalDist()


def _check_alphabet(M) -> int:
    if int(M) != M or M < 2:
        raise ValueError(f"alphabet size M must be an integer >= 2, got {M!r}")
    return int(M)


@dataclass(frozen=True)
class UniformQuantizer:
    """Uniform M-level quantizer with overload parameter ``A``.

    ``thresholds`` holds the M-1 finite cell boundaries. ``edges`` adds the
    virtual outer boundaries used for centroids; the outer cells of the
    quantizer itself remain unbounded.
    """

    M: int
    A: float
    thresholds: np.ndarray
    step: float
    centroids: np.ndarray
    edges: np.ndarray = field(repr=False)

    def __post_init__(self):
        for name in ("thresholds", "centroids", "edges"):
            getattr(self, name).setflags(write=False)

    @property
    def cell_edges(self) -> np.ndarray:
        """Boundaries ``[-inf, thresholds..., +inf]`` of the M cells."""
        return np.concatenate(([-np.inf], self.thresholds, [np.inf]))


def make_uniform_quantizer(M: int, A: float) -> UniformQuantizer:
    M = _check_alphabet(M)
    if not A > 0 or not math.isfinite(A):
        raise ValueError(f"overload parameter A must be positive, got {A!r}")
    A = float(A)
    if M == 2:
        # single threshold at 0, outer cells of width A
        thresholds = np.array([0.0])
        step = A
    else:
        i = np.arange(1, M)
        thresholds = A * (2.0 * (i - 1) / (M - 2) - 1.0)
        step = 2.0 * A / (M - 2)
    edges = np.concatenate(([thresholds[0] - step], thresholds, [thresholds[-1] + step]))
    centroids = 0.5 * (edges[:-1] + edges[1:])
    return UniformQuantizer(M, A, thresholds, step, centroids, edges)


def quantize(q: UniformQuantizer, r):
    """Map observation(s) ``r`` to symbols in ``1..M``.

    A value lying exactly on a threshold goes to the lower cell.
    Accepts scalars or arrays.
    """
    idx = np.searchsorted(q.thresholds, r, side="left") + 1
    if np.ndim(idx) == 0:
        return int(idx)
    return idx


def dequantize(q: UniformQuantizer, m):
    """Centroid of symbol(s) ``m``."""
    m_arr = np.asarray(m)
    if np.any(m_arr < 1) or np.any(m_arr > q.M):
        raise ValueError(f"symbol out of range 1..{q.M}: {m!r}")
    out = q.centroids[m_arr.astype(np.intp) - 1]
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class GaussianObservationModel:
    """Observation ``r = signal(theta) + n`` with ``n ~ N(0, sigma^2)``.

    ``kind="bpsk"`` gives ``signal(theta) = mu * (-1)**(1 + theta)`` for the
    binary hypotheses ``theta in {0, 1}``; ``kind="location"`` gives
    ``signal(theta) = theta``.
    """

    sigma: float
    kind: str = "location"
    mu: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma!r}")
        if self.kind not in ("bpsk", "location"):
            raise ValueError(f"unknown observation model kind {self.kind!r}")

    @classmethod
    def bpsk(cls, mu: float = 1.0, sigma: float = 1.0) -> "GaussianObservationModel":
        return cls(sigma=sigma, kind="bpsk", mu=mu)

    @classmethod
    def location(cls, sigma: float = 1.0) -> "GaussianObservationModel":
        return cls(sigma=sigma, kind="location")

    def mean(self, theta):
        if self.kind == "bpsk":
            # mu * (-1)**(1 + theta) for theta in {0, 1}
            return self.mu * (2 * theta - 1)
        return theta

    def dmean(self, theta) -> float:
        if self.kind == "bpsk":
            raise ValueError("the BPSK signal is not differentiable in theta")
        return 1.0


class SymbolPmf:
    """Probability vector over the alphabet ``1..M``."""

    __slots__ = ("probs",)

    def __init__(self, probs, *, tol: float = PMF_TOL):
        p = np.array(probs, dtype=float)
        if p.ndim != 1 or p.size < 2:
            raise ValueError("a symbol pmf must be a 1-d vector with at least 2 entries")
        if np.any(p < -tol) or np.any(p > 1 + tol) or abs(p.sum() - 1.0) > tol:
            raise ValueError(f"not a probability vector (sum={p.sum()!r}): {p}")
        p.setflags(write=False)
        self.probs = p

    @property
    def M(self) -> int:
        return self.probs.size

    def __array__(self, dtype=None, copy=None):
        return self.probs if dtype is None else self.probs.astype(dtype)

    def __len__(self):
        return self.probs.size

    def __getitem__(self, m):
        return self.probs[m]

    def __repr__(self):
        return f"SymbolPmf({self.probs.tolist()})"


class SymbolPmfGradient:
    """Derivative of a symbol pmf with respect to theta."""

    __slots__ = ("dprobs",)

    def __init__(self, dprobs, *, tol: float = GRAD_TOL):
        g = np.array(dprobs, dtype=float)
        if g.ndim != 1:
            raise ValueError("gradient must be a 1-d vector")
        if abs(g.sum()) > tol * max(1.0, np.abs(g).max(initial=0.0)):
            raise ValueError(f"pmf gradient must sum to zero, got {g.sum()!r}")
        g.setflags(write=False)
        self.dprobs = g

    @property
    def M(self) -> int:
        return self.dprobs.size

    def __array__(self, dtype=None, copy=None):
        return self.dprobs if dtype is None else self.dprobs.astype(dtype)

    def __len__(self):
        return self.dprobs.size

    def __getitem__(self, m):
        return self.dprobs[m]

    def __repr__(self):
        return f"SymbolPmfGradient({self.dprobs.tolist()})"


def _cell_probs(edges_z: np.ndarray) -> np.ndarray:
    # Interval masses from standardized edges along the last axis. Cells in
    # the upper half use survival-function differences to avoid cancellation.
    lo, hi = edges_z[..., :-1], edges_z[..., 1:]
    lower = ndtr(hi) - ndtr(lo)
    upper = ndtr(-lo) - ndtr(-hi)
    return np.where(lo > 0, upper, lower)


def symbol_pmf(model: GaussianObservationModel, q: UniformQuantizer, theta) -> SymbolPmf:
    z = (q.cell_edges - model.mean(theta)) / model.sigma
    probs = np.clip(_cell_probs(z), 0.0, 1.0)
    return SymbolPmf(probs / probs.sum())


def symbol_pmf_array(model: GaussianObservationModel, q: UniformQuantizer, thetas) -> np.ndarray:
    """Vectorized :func:`symbol_pmf`; returns shape ``(len(thetas), M)``."""
    means = np.asarray(model.mean(np.asarray(thetas, dtype=float)), dtype=float)
    z = (q.cell_edges[None, :] - means[:, None]) / model.sigma
    probs = np.clip(_cell_probs(z), 0.0, 1.0)
    return probs / probs.sum(axis=1, keepdims=True)


def normal_pdf(x):
    return _INV_SQRT_2PI * np.exp(-0.5 * np.square(x))


def symbol_pmf_gradient(
    model: GaussianObservationModel, q: UniformQuantizer, theta
) -> SymbolPmfGradient:
    z = (q.cell_edges - model.mean(theta)) / model.sigma
    dens = normal_pdf(z)  # exactly 0 at +-inf
    return SymbolPmfGradient((dens[:-1] - dens[1:]) * model.dmean(theta) / model.sigma)


def gaussian_tail(x):
    """Standard normal tail probability ``1 - Phi(x)``."""
    if np.ndim(x) == 0:
        return 0.5 * math.erfc(x / _SQRT2)
    return ndtr(-np.asarray(x, dtype=float))


def gaussian_tail_inv(p: float) -> float:
    """Inverse of :func:`gaussian_tail` on ``(0, 1)``."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"tail probability must lie in (0, 1), got {p!r}")
    x = -_STD_NORMAL.inv_cdf(p)
    # one Newton step on Q(x) - p polishes the rational approximation
    dens = _INV_SQRT_2PI * math.exp(-0.5 * x * x)
    if dens > 0:
        x += (gaussian_tail(x) - p) / dens
    return x
