"""Per-sensor degradation metrics on post-attack symbol distributions.

All divergences are in nats.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .attack import FlippingMatrix, apply_attack, apply_attack_gradient
from .model import (
    GaussianObservationModel,
    SymbolPmf,
    UniformQuantizer,
    symbol_pmf,
    symbol_pmf_gradient,
)

__all__ = [
    "SupportError",
    "DetectionScenario",
    "EstimationScenario",
    "kld",
    "detection_kld",
    "fisher",
    "estimation_fisher",
    "estimation_fisher_symmetric",
]


class SupportError(ValueError):
    """A term of the divergence or information sum is infinite."""


@dataclass(frozen=True)
class DetectionScenario:
    """Binary hypotheses with BPSK means ``-mu`` (H0) and ``+mu`` (H1)."""

    model: GaussianObservationModel
    quantizer: UniformQuantizer
    priors: tuple = (0.5, 0.5)

    def __post_init__(self):
        p0, p1 = self.priors
        if p0 < 0 or p1 < 0 or abs(p0 + p1 - 1.0) > 1e-12:
            raise ValueError(f"priors must be nonnegative and sum to 1, got {self.priors!r}")
        if self.model.kind != "bpsk":
            raise ValueError("detection scenarios use the BPSK observation model")

    @classmethod
    def gaussian(cls, quantizer, mu=1.0, sigma=1.0, priors=(0.5, 0.5)):
        return cls(GaussianObservationModel.bpsk(mu, sigma), quantizer, tuple(priors))

    @property
    def M(self) -> int:
        return self.quantizer.M

    def pmf(self, theta: int) -> SymbolPmf:
        return symbol_pmf(self.model, self.quantizer, theta)


@dataclass(frozen=True)
class EstimationScenario:
    model: GaussianObservationModel
    quantizer: UniformQuantizer
    theta: float = 0.0

    def __post_init__(self):
        if self.model.kind != "location":
            raise ValueError("estimation scenarios use the location observation model")

    @classmethod
    def gaussian(cls, quantizer, sigma=1.0, theta=0.0):
        return cls(GaussianObservationModel.location(sigma), quantizer, float(theta))

    @property
    def M(self) -> int:
        return self.quantizer.M


def kld(pmf0, pmf1) -> float:
    x = np.asarray(pmf0, dtype=float)
    y = np.asarray(pmf1, dtype=float)
    if x.shape != y.shape:
        raise ValueError("pmfs use different alphabets")
    live = x > 0
    if np.any(y[live] <= 0):
        bad = np.flatnonzero(live & (y <= 0)) + 1
        raise SupportError(f"divergence is infinite: second pmf vanishes on symbols {bad.tolist()}")
    return max(float(np.sum(x[live] * np.log(x[live] / y[live]))), 0.0)


def detection_kld(s: DetectionScenario, P: FlippingMatrix, alpha: float) -> float:
    """Per-sensor KLD between the transmitted-symbol laws under H0 and H1."""
    return kld(apply_attack(s.pmf(0), P, alpha), apply_attack(s.pmf(1), P, alpha))


def fisher(pmf, grad) -> float:
    """Fisher information ``sum_m grad_m**2 / pmf_m`` of a symbol law."""
    z = np.asarray(pmf, dtype=float)
    g = np.asarray(grad, dtype=float)
    if z.shape != g.shape:
        raise ValueError("pmf and gradient use different alphabets")
    live = g != 0
    if np.any(z[live] <= 0):
        bad = np.flatnonzero(live & (z <= 0)) + 1
        raise SupportError(f"information is infinite: pmf vanishes where its derivative does not, symbols {bad.tolist()}")
    return float(np.sum(g[live] ** 2 / z[live]))


def estimation_fisher(s: EstimationScenario, P: FlippingMatrix, alpha: float) -> float:
    """Per-sensor conditional Fisher information after the attack.

    The attack is linear and independent of theta, so the post-attack
    gradient is the clean gradient pushed through the same map.
    """
    z = symbol_pmf(s.model, s.quantizer, s.theta)
    g = symbol_pmf_gradient(s.model, s.quantizer, s.theta)
    return fisher(apply_attack(z, P, alpha), apply_attack_gradient(g, P, alpha))


def estimation_fisher_symmetric(s: EstimationScenario, p: float, alpha: float) -> float:
    """Closed form for the symmetric family: ``(1 - M alpha p)^2 sum (dz_m)^2 / z~_m``."""
    M = s.M
    z = np.asarray(symbol_pmf(s.model, s.quantizer, s.theta))
    g = np.asarray(symbol_pmf_gradient(s.model, s.quantizer, s.theta))
    shrink = 1.0 - M * alpha * p
    zt = alpha * p + shrink * z
    live = g != 0
    if np.any(zt[live] <= 0):
        raise SupportError("information is infinite: post-attack pmf vanishes where its derivative does not")
    return float(shrink**2 * np.sum(g[live] ** 2 / zt[live]))
