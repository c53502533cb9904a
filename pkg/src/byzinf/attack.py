"""Flipping matrices, post-attack symbol distributions and blinding solvers."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .model import PMF_TOL, SymbolPmf, _check_alphabet

__all__ = [
    "FlippingMatrix",
    "ChannelMatrix",
    "AttackSolution",
    "ExistenceConditionError",
    "SingularChannelError",
    "blind_fraction",
    "blind_fraction_exact",
    "optimal_attack",
    "symmetric_attack",
    "apply_attack",
    "apply_attack_gradient",
    "apply_channel",
    "noisy_channel_attack",
    "min_feasible_alpha",
    "worst_case_symmetric_p",
]

SOLVER_TOL = 1e-10
MAX_CONDITION = 1e12


class SingularChannelError(ValueError):
    pass


class ExistenceConditionError(ValueError):
    """No blinding strategy exists: ``(Q^T)^-1 1`` leaves ``[0, M]``."""

    def __init__(self, vector: np.ndarray, M: int):
        self.vector = vector
        super().__init__(
            f"existence condition 0 <= (Q^T)^-1 1 <= {M} violated by {vector.tolist()}"
        )


def _row_stochastic(entries, tol: float, what: str) -> np.ndarray:
    a = np.array(entries, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 2:
        raise ValueError(f"{what} must be a square matrix of size >= 2, got shape {a.shape}")
    if np.any(a < -tol) or np.any(a > 1 + tol):
        raise ValueError(f"{what} entries must lie in [0, 1]")
    if np.any(np.abs(a.sum(axis=1) - 1.0) > tol):
        raise ValueError(f"{what} rows must sum to 1, got {a.sum(axis=1).tolist()}")
    a.setflags(write=False)
    return a


class FlippingMatrix:
    """Row-stochastic attack matrix; entry ``(l, m)`` is P(send m | true l)."""

    __slots__ = ("entries",)

    def __init__(self, entries, *, tol: float = PMF_TOL):
        self.entries = _row_stochastic(entries, tol, "flipping matrix")

    @property
    def M(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def __repr__(self):
        return f"FlippingMatrix({self.entries.tolist()})"


class ChannelMatrix:
    """Row-stochastic sensor-to-FC channel; entry ``(m, n)`` is P(receive n | sent m)."""

    __slots__ = ("entries",)

    def __init__(self, entries, *, tol: float = PMF_TOL):
        self.entries = _row_stochastic(entries, tol, "channel matrix")

    @property
    def M(self) -> int:
        return self.entries.shape[0]

    @property
    def is_doubly_stochastic(self) -> bool:
        return bool(np.all(np.abs(self.entries.sum(axis=0) - 1.0) <= PMF_TOL))

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def __repr__(self):
        return f"ChannelMatrix({self.entries.tolist()})"


@dataclass(frozen=True)
class AttackSolution:
    alpha_blind: float
    matrix: np.ndarray
    feasible: bool
    violations: list = field(default_factory=list)  # (row, col, value), 1-based

    @property
    def diagonal(self) -> np.ndarray:
        return np.diag(self.matrix).copy()


def blind_fraction(M: int) -> float:
    """Smallest compromised fraction that blinds an ideal-channel FC."""
    M = _check_alphabet(M)
    return (M - 1) / M


def blind_fraction_exact(M: int) -> Fraction:
    M = _check_alphabet(M)
    return Fraction(M - 1, M)


def optimal_attack(M: int) -> FlippingMatrix:
    M = _check_alphabet(M)
    P = np.full((M, M), 1.0 / (M - 1))
    np.fill_diagonal(P, 0.0)
    return FlippingMatrix(P)


def symmetric_attack(M: int, p: float) -> FlippingMatrix:
    """One-parameter family: off-diagonal ``p``, diagonal ``1 - (M-1) p``."""
    M = _check_alphabet(M)
    p_max = 1.0 / (M - 1)
    if not (0.0 <= p <= p_max + 1e-15):
        raise ValueError(f"flipping probability p={p!r} outside [0, 1/(M-1)] = [0, {p_max!r}]")
    if p >= p_max:
        return optimal_attack(M)
    P = np.full((M, M), float(p))
    np.fill_diagonal(P, 1.0 - (M - 1) * p)
    return FlippingMatrix(P)


def _check_alpha(alpha: float):
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"Byzantine fraction alpha={alpha!r} outside [0, 1]")


def _matrix(P) -> np.ndarray:
    return P.entries if isinstance(P, (FlippingMatrix, ChannelMatrix)) else np.asarray(P, float)


def apply_attack(pmf, P, alpha: float) -> SymbolPmf:
    """Distribution of the transmitted symbol when a fraction ``alpha`` of nodes flip via ``P``."""
    _check_alpha(alpha)
    x = np.asarray(pmf, dtype=float)
    Pm = _matrix(P)
    if Pm.shape != (x.size, x.size):
        raise ValueError("pmf and flipping matrix use different alphabets")
    return SymbolPmf(alpha * (x @ Pm) + (1.0 - alpha) * x)


def apply_attack_gradient(grad, P, alpha: float) -> np.ndarray:
    """The same linear map applied to a pmf derivative (the attack does not depend on theta)."""
    _check_alpha(alpha)
    g = np.asarray(grad, dtype=float)
    return alpha * (g @ _matrix(P)) + (1.0 - alpha) * g


def apply_channel(pmf, Q) -> SymbolPmf:
    x = np.asarray(pmf, dtype=float)
    Qm = _matrix(Q)
    if Qm.shape != (x.size, x.size):
        raise ValueError("pmf and channel matrix use different alphabets")
    return SymbolPmf(x @ Qm)


def _column_weights(Q: ChannelMatrix) -> np.ndarray:
    """``(Q^T)^-1 1``, i.e. the column sums of ``Q^-1``."""
    Qm = Q.entries
    cond = np.linalg.cond(Qm)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise SingularChannelError(f"channel matrix is singular (condition number {cond:.3g})")
    return np.linalg.solve(Qm.T, np.ones(Qm.shape[0]))


def _blinding_matrix(Q: ChannelMatrix, alpha: float) -> np.ndarray:
    M = Q.M
    Qinv = np.linalg.inv(Q.entries)
    return np.ones((M, M)) @ Qinv / (alpha * M) - (1.0 - alpha) / alpha * np.eye(M)


def _violations(P: np.ndarray, tol: float = SOLVER_TOL) -> list:
    bad = np.argwhere((P < -tol) | (P > 1.0 + tol))
    return [(int(r) + 1, int(c) + 1, float(P[r, c])) for r, c in bad]


def noisy_channel_attack(Q: ChannelMatrix) -> AttackSolution:
    """Blinding attack through a non-ideal, invertible FC channel.

    Returns the closed-form pair ``(alpha_blind, P)`` as derived for a
    general row-stochastic channel, with a feasibility verdict. For a
    channel that is not doubly stochastic the closed-form ``P`` can have
    entries outside ``[0, 1]``; those are listed in ``violations`` rather
    than corrected. :func:`min_feasible_alpha` gives the smallest fraction
    for which the blinding matrix is a valid stochastic matrix.
    """
    if not isinstance(Q, ChannelMatrix):
        Q = ChannelMatrix(Q)
    M = Q.M
    w = _column_weights(Q)
    if np.any(w < -SOLVER_TOL) or np.any(w > M + SOLVER_TOL):
        raise ExistenceConditionError(w, M)
    alpha = float(1.0 - w.max() / M)
    if alpha <= 0.0:
        raise ExistenceConditionError(w, M)
    P = _blinding_matrix(Q, alpha)
    viol = _violations(P)
    rows_ok = bool(np.all(np.abs(P.sum(axis=1) - 1.0) <= SOLVER_TOL))
    return AttackSolution(alpha, P, feasible=not viol and rows_ok, violations=viol)


def min_feasible_alpha(Q: ChannelMatrix, tol: float = 1e-12) -> float:
    """Smallest alpha whose blinding matrix is entrywise in ``[0, 1]``.

    Extension beyond the closed-form solver: found by bisection on alpha,
    using that feasibility is monotone in alpha.
    """
    if not isinstance(Q, ChannelMatrix):
        Q = ChannelMatrix(Q)
    w = _column_weights(Q)
    M = Q.M
    if np.any(w < -SOLVER_TOL) or np.any(w > M + SOLVER_TOL):
        raise ExistenceConditionError(w, M)

    def feasible(a):
        return not _violations(_blinding_matrix(Q, a))

    lo, hi = 0.0, 1.0
    if not feasible(hi):
        raise ExistenceConditionError(w, M)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi


def worst_case_symmetric_p(M: int) -> float:
    """Most damaging flipping probability within the symmetric family, for any alpha below blinding."""
    M = _check_alphabet(M)
    return 1.0 / (M - 1)
