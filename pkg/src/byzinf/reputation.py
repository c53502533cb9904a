"""Reputation-based identification of Byzantine nodes.

The FC scores node ``i`` at every step by the squared deviation between the
centroid of the symbol it sent and the observation predicted from the
fused inference, averages the scores over time and tags the node Byzantine
once the average exceeds a threshold ``eta``.

For the centroid-average estimation fusion the mean and variance of the
deviation follow from raw moments (orders 1 to 4) of each node's dequantized
symbol. Nodes are treated as independent given the type of node ``i``,
with each other node Byzantine with probability ``pi_BH`` or ``pi_BB``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.integrate import quad_vec
from scipy.special import comb

from . import kernels
from .attack import FlippingMatrix, apply_attack
from .fusion import NetworkConfig, _trial_blocks, fusion_estimates, llr_table, map_decisions, sample_transmissions
from .metrics import DetectionScenario, EstimationScenario
from .model import (
    GaussianObservationModel,
    SymbolPmf,
    UniformQuantizer,
    gaussian_tail_inv,
    symbol_pmf,
)

__all__ = [
    "NodeType",
    "ReputationState",
    "UniformPrior",
    "PointPrior",
    "TypeConditionalModel",
    "EstimationFusion",
    "IdentificationSeries",
    "deviation",
    "tag",
    "type_conditional_pmf",
    "marginal_type_conditional_pmf",
    "raw_moments",
    "linear_combination_moments",
    "deviation_moments",
    "closed_form_n5",
    "asymptotic_threshold",
    "midpoint_threshold",
    "sample_deviations",
    "run_identification",
]


class NodeType(str, Enum):
    HONEST = "H"
    BYZANTINE = "B"


UNTAGGED, HONEST_TAG, BYZANTINE_TAG = 0, 1, 2


def deviation(v, theta_hat, quantizer: UniformQuantizer, f=lambda t: t):
    """Squared gap between the centroid of ``v`` and the predicted observation ``f(theta_hat)``."""
    c = quantizer.centroids[np.asarray(v, dtype=np.intp) - 1]
    out = (c - f(theta_hat)) ** 2
    return float(out) if np.ndim(out) == 0 else out


def tag(lam: float, eta: float) -> NodeType:
    """Byzantine iff the reputation strictly exceeds ``eta``."""
    return NodeType.BYZANTINE if lam > eta else NodeType.HONEST


class ReputationState:
    """Running deviation sums of ``n_nodes`` nodes."""

    def __init__(self, n_nodes: int):
        self.sums = np.zeros(n_nodes)
        self.counts = np.zeros(n_nodes, dtype=np.int64)
        self.tags = np.full(n_nodes, UNTAGGED, dtype=np.int8)

    def update(self, node: int, d: float) -> "ReputationState":
        if d < 0:
            raise ValueError("deviations are nonnegative")
        self.sums[node] += d
        self.counts[node] += 1
        return self

    def update_all(self, d) -> "ReputationState":
        d = np.asarray(d, dtype=float)
        if np.any(d < 0):
            raise ValueError("deviations are nonnegative")
        self.sums += d
        self.counts += 1
        return self

    @property
    def reputation(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.counts > 0, self.sums / np.maximum(self.counts, 1), np.nan)

    def retag(self, eta: float) -> np.ndarray:
        lam = self.reputation
        seen = self.counts > 0
        self.tags = np.where(~seen, UNTAGGED, np.where(lam > eta, BYZANTINE_TAG, HONEST_TAG)).astype(np.int8)
        return self.tags


@dataclass(frozen=True)
class UniformPrior:
    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        if not self.hi > self.lo:
            raise ValueError("uniform prior needs hi > lo")


@dataclass(frozen=True)
class PointPrior:
    theta: float


@dataclass(frozen=True)
class TypeConditionalModel:
    N: int
    alpha: float
    attack: FlippingMatrix
    quantizer: UniformQuantizer
    model: GaussianObservationModel
    prior: UniformPrior | PointPrior = UniformPrior()

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("need at least two nodes")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha={self.alpha!r} outside [0, 1]")
        if self.attack.M != self.quantizer.M:
            raise ValueError("attack matrix and quantizer use different alphabets")

    @property
    def M(self) -> int:
        return self.quantizer.M

    @property
    def pi_bh(self) -> float:
        """P(node j Byzantine | node i honest)."""
        pi = self.N * self.alpha / (self.N - 1)
        if pi > 1.0 + 1e-12:
            raise ValueError(
                f"pi_BH = N alpha / (N - 1) = {pi:.6g} > 1; alpha must not exceed (N-1)/N = {(self.N - 1) / self.N:.6g}"
            )
        return min(pi, 1.0)

    @property
    def pi_bb(self) -> float:
        """P(node j Byzantine | node i Byzantine)."""
        pi = (self.N * self.alpha - 1) / (self.N - 1)
        if pi < -1e-12:
            raise ValueError(f"pi_BB = (N alpha - 1) / (N - 1) = {pi:.6g} < 0; a Byzantine node needs N alpha >= 1")
        return max(pi, 0.0)


def _pi(m: TypeConditionalModel, type_of_i) -> float:
    return m.pi_bh if NodeType(type_of_i) is NodeType.HONEST else m.pi_bb


def _type_conditional_probs(m: TypeConditionalModel, same_node: bool, type_of_i, theta) -> np.ndarray:
    clean = np.asarray(symbol_pmf(m.model, m.quantizer, theta))
    attacked = clean @ m.attack.entries
    if same_node:
        return clean if NodeType(type_of_i) is NodeType.HONEST else attacked
    pi = _pi(m, type_of_i)
    return (1.0 - pi) * clean + pi * attacked


def type_conditional_pmf(m: TypeConditionalModel, j: int, i: int, type_of_i, theta) -> SymbolPmf:
    """Law of node ``j``'s symbol given theta and the type of node ``i``."""
    return SymbolPmf(_type_conditional_probs(m, j == i, type_of_i, theta))


def marginal_type_conditional_pmf(
    m: TypeConditionalModel, j: int, i: int, type_of_i, *, epsabs: float = 1e-9
) -> SymbolPmf:
    """The conditional law above averaged over the prior on theta."""
    if isinstance(m.prior, PointPrior):
        return type_conditional_pmf(m, j, i, type_of_i, m.prior.theta)
    lo, hi = m.prior.lo, m.prior.hi
    vals, err = quad_vec(
        lambda t: _type_conditional_probs(m, j == i, type_of_i, t), lo, hi, epsabs=epsabs * (hi - lo)
    )
    if not np.all(np.isfinite(vals)):
        raise ArithmeticError("quadrature did not converge")
    return SymbolPmf(np.clip(vals / (hi - lo), 0.0, 1.0), tol=1e-8)


def raw_moments(pmf, values, order: int = 4) -> np.ndarray:
    """``[1, E X, ..., E X**order]`` for ``X = values[v - 1]``, ``v ~ pmf``."""
    p = np.asarray(pmf, dtype=float)
    x = np.asarray(values, dtype=float)
    return np.array([np.dot(p, x**k) for k in range(order + 1)])


def linear_combination_moments(coeffs, moments) -> np.ndarray:
    """Raw moments of ``sum_j coeffs[j] * X_j`` for independent ``X_j``.

    ``moments[j]`` holds the raw moments of ``X_j`` from order 0 up. The sum
    is built one term at a time with the binomial expansion.
    """
    moments = np.asarray(moments, dtype=float)
    order = moments.shape[1] - 1
    k = np.arange(order + 1)
    total = np.zeros(order + 1)
    total[0] = 1.0
    for c, mom in zip(coeffs, moments):
        scaled = mom * float(c) ** k
        total = np.array(
            [sum(comb(n, r, exact=True) * total[r] * scaled[n - r] for r in range(n + 1)) for n in k]
        )
    return total


@dataclass(frozen=True)
class EstimationFusion:
    """Centroid-sum estimator ``theta_hat = sum_i centroid(v_i) / divisor``.

    ``divisor`` is ``"N"`` (the sample mean), ``"M"`` or a positive number.
    """

    divisor: str | float = "N"

    def value(self, N: int, M: int) -> float:
        d = {"N": N, "M": M}.get(self.divisor, self.divisor)
        d = float(d)
        if not d > 0:
            raise ValueError(f"fusion divisor must be positive, got {self.divisor!r}")
        return d


def _node_moment_table(m: TypeConditionalModel, type_of_i, order: int = 4):
    own = marginal_type_conditional_pmf(m, 0, 0, type_of_i)
    other = marginal_type_conditional_pmf(m, 1, 0, type_of_i)
    c = m.quantizer.centroids
    return raw_moments(own, c, order), raw_moments(other, c, order)


def deviation_moments(
    m: TypeConditionalModel, fusion: EstimationFusion, type_of_i=NodeType.HONEST
) -> tuple[float, float]:
    """Mean and variance of one step's deviation of node ``i`` given its type."""
    N = m.N
    D = fusion.value(N, m.M)
    own, other = _node_moment_table(m, type_of_i)
    coeffs = [1.0 - 1.0 / D] + [-1.0 / D] * (N - 1)
    mom = linear_combination_moments(coeffs, [own] + [other] * (N - 1))
    mean = mom[2]
    return float(mean), float(max(mom[4] - mean**2, 0.0))


def closed_form_n5(m: TypeConditionalModel) -> tuple[float, float]:
    """Hand-expanded mean and fourth moment of the honest deviation for five nodes.

    Uses the centroid sum divided by M as the fusion rule. Independent of
    :func:`deviation_moments`, which it cross-checks.
    """
    if m.N != 5:
        raise ValueError("the hand-expanded moments hold for N = 5 only")
    own, other = _node_moment_table(m, NodeType.HONEST)
    M = m.M
    a = M - 1
    p11, p12, p13, p14 = own[1:5]
    p21, p22, p23, p24 = other[1:5]
    mu = (a**2 * p12 + 4 * p22 + 12 * p21**2 - 8 * a * p11 * p21) / M**2
    delta = (
        a**4 * p14
        - 16 * a**3 * p13 * p21
        + 6 * a**2 * p12 * (4 * p22 + 12 * p21**2)
        - 4 * a * p11 * (4 * p23 + 36 * p22 * p21 + 24 * p21**3)
        + 4 * p24
        + 12 * p23 * p21
        + 36 * (p23 * p21 + p22**2 + 2 * p22 * p21**2)
        + 24 * (p21**4 + 3 * p22 * p21**2)
    ) / M**4
    return float(mu), float(delta)


def asymptotic_threshold(
    m: TypeConditionalModel, fusion: EstimationFusion, xi: float, T: int = 1
) -> float:
    """Large-T Neyman-Pearson threshold: honest mean plus ``Q^-1(xi)`` honest standard deviations.

    The honest reputation is treated as Gaussian with variance ``Var[d] / T``.
    """
    if not 0.0 < xi < 1.0:
        raise ValueError(f"false-tag probability xi must lie in (0, 1), got {xi!r}")
    if T < 1:
        raise ValueError("T must be positive")
    mean, var = deviation_moments(m, fusion, NodeType.HONEST)
    if xi == 0.5:
        return mean
    return mean + math.sqrt(var / T) * gaussian_tail_inv(xi)


def midpoint_threshold(scenario, cfg: NetworkConfig) -> float:
    """Threshold halfway between the long-run honest and Byzantine reputations.

    For detection the FC inference is taken as correct; for estimation the
    moment engine is used with the scenario's theta and the sample-mean fusion.
    """
    if isinstance(scenario, DetectionScenario):
        c = cfg.quantizer.centroids
        mus = np.zeros(2)
        for theta, prior in zip((0, 1), scenario.priors):
            clean = np.asarray(scenario.pmf(theta))
            dev = (c - scenario.model.mean(theta)) ** 2
            mus += prior * np.array([clean @ dev, (clean @ cfg.attack.entries) @ dev])
        return float(mus.mean())
    tcm = TypeConditionalModel(
        cfg.N, cfg.alpha, cfg.attack, cfg.quantizer, scenario.model,
        PointPrior(scenario.theta),
    )
    mu_h, _ = deviation_moments(tcm, EstimationFusion("N"), NodeType.HONEST)
    mu_b, _ = deviation_moments(tcm, EstimationFusion("N"), NodeType.BYZANTINE)
    return 0.5 * (mu_h + mu_b)


def sample_deviations(
    m: TypeConditionalModel,
    fusion: EstimationFusion,
    type_of_i,
    samples: int,
    seed: int = 0,
) -> np.ndarray:
    """Deviations of node 0 simulated without the independence approximation.

    Every sample draws one theta shared by all nodes and exactly
    ``round(alpha N)`` Byzantine nodes, node 0 being of the given type.
    """
    N, M = m.N, m.M
    q = m.quantizer
    D = fusion.value(N, M)
    rng = np.random.Generator(np.random.Philox(key=[seed, 0x5EED]))
    k = int(math.floor(m.alpha * N + 0.5))
    byz0 = NodeType(type_of_i) is NodeType.BYZANTINE
    if byz0 and k < 1:
        raise ValueError("no Byzantine node to condition on")
    if isinstance(m.prior, PointPrior):
        theta = np.full(samples, m.prior.theta)
    else:
        theta = rng.uniform(m.prior.lo, m.prior.hi, samples)
    r = m.model.mean(theta)[:, None] + m.model.sigma * rng.standard_normal((samples, N))
    u = np.searchsorted(q.thresholds, r, side="left")
    # Byzantine set: node 0 per its type, the rest a random subset of nodes 1..N-1
    others = np.argsort(rng.random((samples, N - 1)), axis=1) + 1
    byz = np.zeros((samples, N), dtype=bool)
    n_other = k - 1 if byz0 else k
    if n_other > 0:
        np.put_along_axis(byz, others[:, :n_other], True, axis=1)
    byz[:, 0] = byz0
    cdf = np.cumsum(m.attack.entries, axis=1)
    flips = (rng.random((samples, N))[..., None] >= cdf[u][..., : M - 1]).sum(axis=-1)
    v = np.where(byz, flips, u)
    x = q.centroids[v]
    theta_hat = x.sum(axis=1) / D
    return (x[:, 0] - theta_hat) ** 2


@dataclass(frozen=True)
class IdentificationSeries:
    t: np.ndarray
    identified: np.ndarray  # Byzantine nodes currently tagged Byzantine
    tagged: np.ndarray  # all nodes currently tagged Byzantine
    honest_mislabel: np.ndarray  # fraction of honest nodes tagged Byzantine
    byzantine_mislabel: np.ndarray  # fraction of Byzantine nodes tagged honest
    eta: float


def run_identification(
    scenario: DetectionScenario | EstimationScenario,
    cfg: NetworkConfig,
    eta: float,
    T_max: int,
    *,
    divisor: str | float = "N",
) -> IdentificationSeries:
    """Tag every node at each step ``t = 1..T_max`` from its running reputation.

    Detection scenarios draw the hypothesis each step from the priors and
    fuse with the clean-likelihood MAP rule; the predicted observation is the
    BPSK mean of the decision. Estimation scenarios keep theta fixed and
    fuse by the centroid sum.
    """
    if T_max < 1:
        raise ValueError("T_max must be positive")
    if not eta > 0:
        raise ValueError("eta must be positive")
    N, M = cfg.N, cfg.M
    steps = np.arange(1, T_max + 1)
    blocks = _trial_blocks(cfg.seed, steps, N, domain="identification-step")
    counts_fn = kernels.symbol_counts
    if isinstance(scenario, DetectionScenario):
        thetas = (blocks[:, 0] < scenario.priors[1]).astype(float)
        sym = sample_transmissions(scenario.model, cfg, thetas, blocks)
        dec = map_decisions(counts_fn(sym, M), llr_table(scenario), scenario.priors, blocks[:, 1])
        predicted = scenario.model.mean(dec.astype(float))
    else:
        sym = sample_transmissions(scenario.model, cfg, np.full(T_max, scenario.theta), blocks)
        D = EstimationFusion(divisor).value(N, M)
        predicted = fusion_estimates(counts_fn(sym, M), cfg.quantizer.centroids, D)
    cum = kernels.cumulative_deviations(sym, cfg.quantizer.centroids, np.asarray(predicted, float))
    tags = cum / steps[:, None] > eta
    byz = cfg.byzantine
    n_byz = int(byz.sum())
    n_hon = N - n_byz
    identified = (tags & byz).sum(axis=1)
    false_tags = (tags & ~byz).sum(axis=1)
    return IdentificationSeries(
        t=steps,
        identified=identified,
        tagged=tags.sum(axis=1),
        honest_mislabel=false_tags / n_hon if n_hon else np.zeros(T_max),
        byzantine_mislabel=(n_byz - identified) / n_byz if n_byz else np.zeros(T_max),
        eta=float(eta),
    )
