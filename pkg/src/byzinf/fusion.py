"""Seeded Monte Carlo simulation of an N-sensor network under attack.

Randomness is drawn from one counter-based stream per trial (see
:mod:`byzinf.streams`); within a trial, sensor ``i`` always consumes the
``i``-th uniform of each block. Trials can therefore be evaluated in any
order or in parallel with identical results.

Each trial stream is laid out as ``[hypothesis, tie-break, obs[N], flip[N],
identity[N]]``; the identity block is only read when Byzantine identities
are redrawn per trial.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from statsmodels.stats.proportion import proportion_confint

from . import kernels
from .attack import FlippingMatrix, apply_attack
from .metrics import DetectionScenario, EstimationScenario
from .model import GaussianObservationModel, UniformQuantizer, quantize, symbol_pmf_array
from .streams import stream

__all__ = [
    "NetworkConfig",
    "TrialRecord",
    "DetectionSummary",
    "EstimationSummary",
    "draw_symbol",
    "sample_transmissions",
    "simulate_detection",
    "simulate_estimation",
    "map_decisions",
    "fusion_estimates",
]

_CHUNK = 2048
_TIE_RTOL = 1e-12


def byzantine_count(N: int, alpha: float) -> int:
    """``alpha * N`` rounded half up."""
    return int(math.floor(alpha * N + 0.5))


@dataclass(frozen=True)
class NetworkConfig:
    N: int
    alpha: float
    attack: FlippingMatrix
    quantizer: UniformQuantizer
    seed: int = 0
    byzantine: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.N < 1:
            raise ValueError(f"N must be positive, got {self.N!r}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha={self.alpha!r} outside [0, 1]")
        if self.attack.M != self.quantizer.M:
            raise ValueError("attack matrix and quantizer use different alphabets")
        k = byzantine_count(self.N, self.alpha)
        mask = np.zeros(self.N, dtype=bool)
        mask[stream(self.seed, "byzantine-set").choice(self.N, size=k, replace=False)] = True
        mask.setflags(write=False)
        object.__setattr__(self, "byzantine", mask)

    @property
    def byzantine_count(self) -> int:
        return int(self.byzantine.sum())

    @property
    def M(self) -> int:
        return self.quantizer.M


@dataclass(frozen=True)
class TrialRecord:
    true_theta: float
    transmitted: np.ndarray
    decision: float


@dataclass(frozen=True)
class DetectionSummary:
    trials: int
    p_miss: float
    p_false_alarm: float
    p_error: float
    ci_miss: tuple
    ci_false_alarm: tuple
    ci_error: tuple
    records: list | None = None


@dataclass(frozen=True)
class EstimationSummary:
    trials: int
    mse: float
    stderr: float
    mean_estimate: float
    records: list | None = None


def draw_symbol(
    model: GaussianObservationModel,
    quantizer: UniformQuantizer,
    theta,
    is_byzantine: bool,
    attack: FlippingMatrix,
    rng: np.random.Generator,
) -> int:
    """One transmitted symbol: quantize a fresh observation, then flip if Byzantine."""
    r = model.mean(theta) + model.sigma * rng.standard_normal()
    u = quantize(quantizer, r)
    if not is_byzantine:
        return u
    return int(rng.choice(quantizer.M, p=attack.entries[u - 1])) + 1


def _cdf(probs: np.ndarray) -> np.ndarray:
    c = np.cumsum(probs, axis=-1)
    c[..., -1] = 1.0
    return c


def _trial_blocks(seed: int, trials, N: int, domain: str = "trial") -> np.ndarray:
    out = np.empty((len(trials), 2 + 3 * N))
    for row, t in enumerate(trials):
        out[row] = stream(seed, domain, t).random(2 + 3 * N)
    return out


def _redrawn_identities(u_id: np.ndarray, k: int) -> np.ndarray:
    # the k sensors with the smallest identity uniforms are Byzantine this trial
    mask = np.zeros(u_id.shape, dtype=bool)
    if k:
        idx = np.argsort(u_id, axis=1, kind="stable")[:, :k]
        np.put_along_axis(mask, idx, True, axis=1)
    return mask


def sample_transmissions(
    model: GaussianObservationModel,
    cfg: NetworkConfig,
    thetas,
    blocks: np.ndarray,
    *,
    redraw_identities: bool = False,
) -> np.ndarray:
    """Transmitted symbols, one row per trial, for per-trial parameters ``thetas``.

    ``blocks`` are the per-trial uniform blocks from the trial streams.
    Rows share the same fixed Byzantine set unless ``redraw_identities``.
    """
    N = cfg.N
    q = cfg.quantizer
    thetas = np.asarray(thetas, dtype=float)
    uniq, inv = np.unique(thetas, return_inverse=True)
    obs_cdf = _cdf(symbol_pmf_array(model, q, uniq))[inv]
    if redraw_identities:
        byz = _redrawn_identities(blocks[:, 2 + 2 * N :], cfg.byzantine_count)
    else:
        byz = cfg.byzantine
    return kernels.draw_symbols(
        blocks[:, 2 : 2 + N], obs_cdf, byz, blocks[:, 2 + N : 2 + 2 * N], _cdf(cfg.attack.entries)
    )


def llr_table(s: DetectionScenario, attack: FlippingMatrix | None = None, alpha: float = 0.0):
    """Per-symbol ``log P(v|H1)/P(v|H0)``; clean likelihoods unless an attack model is given."""
    x, y = s.pmf(0), s.pmf(1)
    if attack is not None:
        x, y = apply_attack(x, attack, alpha), apply_attack(y, attack, alpha)
    x, y = np.asarray(x), np.asarray(y)
    with np.errstate(divide="ignore"):
        return np.log(y) - np.log(x)


def map_decisions(counts: np.ndarray, llr: np.ndarray, priors, u_tie: np.ndarray) -> np.ndarray:
    """MAP fusion of symbol counts; exact ties go to a fair coin."""
    p0, p1 = priors
    if p1 == 0:
        return np.zeros(counts.shape[0], dtype=np.int64)
    if p0 == 0:
        return np.ones(counts.shape[0], dtype=np.int64)
    thresh = math.log(p0 / p1)
    finite = np.isfinite(llr)
    stat = counts[:, finite] @ llr[finite]
    # symbols impossible under one hypothesis settle the decision outright
    pos = (counts[:, ~finite] > 0) & (llr[~finite] > 0)
    neg = (counts[:, ~finite] > 0) & (llr[~finite] < 0)
    scale = counts[:, finite] @ np.abs(llr[finite]) + abs(thresh)
    tie = np.abs(stat - thresh) <= _TIE_RTOL * np.maximum(scale, 1.0)
    dec = np.where(tie, (u_tie < 0.5).astype(np.int64), (stat > thresh).astype(np.int64))
    dec = np.where(pos.any(axis=1), 1, dec)
    dec = np.where(neg.any(axis=1) & ~pos.any(axis=1), 0, dec)
    return dec


def fusion_estimates(counts: np.ndarray, centroids: np.ndarray, divisor: float) -> np.ndarray:
    return counts @ centroids / divisor


def _chunks(trials: int, workers: int, fn):
    starts = range(0, trials, _CHUNK)
    spans = [range(s, min(trials, s + _CHUNK)) for s in starts]
    if workers > 1 and len(spans) > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(fn, spans))
    return [fn(span) for span in spans]


def _wilson(k: int, n: int):
    if n == 0:
        return (0.0, 1.0)
    lo, hi = proportion_confint(k, n, alpha=0.05, method="wilson")
    return (float(lo), float(hi))


def simulate_detection(
    s: DetectionScenario,
    cfg: NetworkConfig,
    trials: int,
    *,
    attack_aware: bool = False,
    redraw_identities: bool = False,
    keep_records: bool = False,
    workers: int = 1,
) -> DetectionSummary:
    """Monte Carlo error rates of the MAP fusion rule.

    By default the FC fuses with clean (attack-unaware) likelihoods;
    ``attack_aware`` uses the post-attack symbol laws instead.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    if s.M != cfg.M:
        raise ValueError("scenario and network use different alphabets")
    llr = llr_table(s, cfg.attack, cfg.alpha) if attack_aware else llr_table(s)

    def run(span):
        blocks = _trial_blocks(cfg.seed, span, cfg.N)
        hyp = (blocks[:, 0] < s.priors[1]).astype(np.int64)
        sym = sample_transmissions(s.model, cfg, hyp, blocks, redraw_identities=redraw_identities)
        dec = map_decisions(kernels.symbol_counts(sym, cfg.M), llr, s.priors, blocks[:, 1])
        return hyp, dec, (sym if keep_records else None)

    parts = _chunks(trials, workers, run)
    hyp = np.concatenate([p[0] for p in parts])
    dec = np.concatenate([p[1] for p in parts])
    n1 = int(hyp.sum())
    n0 = trials - n1
    miss = int(np.sum((hyp == 1) & (dec == 0)))
    fa = int(np.sum((hyp == 0) & (dec == 1)))
    records = None
    if keep_records:
        sym = np.concatenate([p[2] for p in parts])
        records = [TrialRecord(float(h), sym[i], float(d)) for i, (h, d) in enumerate(zip(hyp, dec))]
    return DetectionSummary(
        trials=trials,
        p_miss=miss / n1 if n1 else 0.0,
        p_false_alarm=fa / n0 if n0 else 0.0,
        p_error=(miss + fa) / trials,
        ci_miss=_wilson(miss, n1),
        ci_false_alarm=_wilson(fa, n0),
        ci_error=_wilson(miss + fa, trials),
        records=records,
    )


def simulate_estimation(
    s: EstimationScenario,
    cfg: NetworkConfig,
    trials: int,
    *,
    divisor: float | str = "N",
    redraw_identities: bool = False,
    keep_records: bool = False,
    workers: int = 1,
) -> EstimationSummary:
    """Sample MSE of the centroid-sum estimator ``sum_i centroid(v_i) / divisor``.

    ``divisor`` is ``"N"`` (sample mean, the default), ``"M"`` or a number.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    if s.M != cfg.M:
        raise ValueError("scenario and network use different alphabets")
    D = {"N": cfg.N, "M": cfg.M}.get(divisor, divisor)
    D = float(D)
    theta = s.theta
    centroids = cfg.quantizer.centroids

    def run(span):
        blocks = _trial_blocks(cfg.seed, span, cfg.N)
        sym = sample_transmissions(
            s.model, cfg, np.full(len(span), theta), blocks, redraw_identities=redraw_identities
        )
        est = fusion_estimates(kernels.symbol_counts(sym, cfg.M), centroids, D)
        return est, (sym if keep_records else None)

    parts = _chunks(trials, workers, run)
    est = np.concatenate([p[0] for p in parts])
    err2 = (est - theta) ** 2
    records = None
    if keep_records:
        sym = np.concatenate([p[1] for p in parts])
        records = [TrialRecord(theta, sym[i], float(e)) for i, e in enumerate(est)]
    stderr = float(err2.std(ddof=1) / math.sqrt(trials)) if trials > 1 else float("nan")
    return EstimationSummary(
        trials=trials,
        mse=float(err2.mean()),
        stderr=stderr,
        mean_estimate=float(est.mean()),
        records=records,
    )
