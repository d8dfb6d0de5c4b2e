"""Relaxed selection problems solved on the local server.

All three reward models reduce to a linear program with two general rows
(cardinality and budget) plus box constraints, solved exactly by
:func:`solve_two_row_lp`.  AWC wraps that kernel in a continuous greedy
loop over the closed-form multilinear extension.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import AIC_CLAMP, RewardModel

log = logging.getLogger(__name__)

_STATUS = {
    _kernels.STATUS_OPTIMAL: "optimal",
    _kernels.STATUS_APPROX: "approx",
    _kernels.STATUS_FALLBACK: "infeasible_fallback",
}

DEFAULT_CG_STEPS = 100


@dataclass(frozen=True)
class RelaxedProblem:
    mu_bar: np.ndarray
    c_lower: np.ndarray
    N: int
    rho: float
    model: RewardModel

    def __post_init__(self):
        mu = np.asarray(self.mu_bar, dtype=float)
        c = np.asarray(self.c_lower, dtype=float)
        if mu.ndim != 1 or mu.shape != c.shape:
            raise ValueError(f"mu_bar and c_lower must be equal-length vectors, got {mu.shape} and {c.shape}")
        if not 1 <= self.N <= mu.shape[0]:
            raise ValueError(f"need 1 <= N <= K, got N={self.N}, K={mu.shape[0]}")
        object.__setattr__(self, "mu_bar", mu)
        object.__setattr__(self, "c_lower", c)
        object.__setattr__(self, "model", RewardModel.parse(self.model))


@dataclass
class SolveReport:
    z: np.ndarray
    objective: float
    status: str
    iterations: int

    @property
    def fractional_count(self) -> int:
        return int(np.sum((self.z > 0.0) & (self.z < 1.0)))


def solve_two_row_lp(w, c, N: int, rho: float, equality: bool) -> SolveReport:
    """Exact maximiser of ``w @ z`` over the two-row bounded polytope.

    ``sum(z) == N`` when ``equality`` else ``sum(z) <= N``; always
    ``c @ z <= rho`` and ``0 <= z <= 1``.  When the equality form is
    infeasible (the N cheapest arms exceed ``rho``) the indicator of the N
    cheapest arms is returned with status ``infeasible_fallback``.
    """
    w = np.ascontiguousarray(w, dtype=float)
    c = np.ascontiguousarray(c, dtype=float)
    if w.shape != c.shape or w.ndim != 1:
        raise ValueError("w and c must be equal-length vectors")
    if np.any(c < 0):
        raise ValueError("costs must be non-negative")
    if not 1 <= N <= w.shape[0]:
        raise ValueError(f"need 1 <= N <= K, got N={N}, K={w.shape[0]}")
    z, status, evals = _kernels.two_row_lp(w, c, int(N), float(rho), bool(equality))
    if status == _kernels.STATUS_FALLBACK:
        log.info("budget %.6g infeasible for %d arms; using the %d cheapest", rho, N, N)
    return SolveReport(z=z, objective=float(w @ z), status=_STATUS[status], iterations=int(evals))


def solve_suc(p: RelaxedProblem) -> SolveReport:
    if p.model is not RewardModel.SUC:
        raise ValueError(f"expected an SUC problem, got {p.model.value}")
    return solve_two_row_lp(p.mu_bar, p.c_lower, p.N, p.rho, equality=True)


def solve_aic(p: RelaxedProblem) -> SolveReport:
    """Log-linear program; the objective is reported as ``prod(mu ** z)``."""
    if p.model is not RewardModel.AIC:
        raise ValueError(f"expected an AIC problem, got {p.model.value}")
    logs = np.log(np.maximum(p.mu_bar, AIC_CLAMP))
    rep = solve_two_row_lp(logs, p.c_lower, p.N, p.rho, equality=True)
    rep.objective = float(np.exp(rep.objective))
    return rep


def solve_awc(p: RelaxedProblem, steps: int = DEFAULT_CG_STEPS) -> SolveReport:
    """Continuous greedy over ``1 - prod(1 - mu z)``.

    Each step moves ``1/steps`` along the LP direction maximising the
    current gradient, so the result is an average of feasible vertices.
    """
    if p.model is not RewardModel.AWC:
        raise ValueError(f"expected an AWC problem, got {p.model.value}")
    if steps < 1:
        raise ValueError("steps must be >= 1")
    z, _, evals = greedy_trace(p, steps)
    objective = float(1.0 - np.prod(1.0 - p.mu_bar * z))
    return SolveReport(z=z, objective=objective, status="approx", iterations=int(steps))


def greedy_trace(p: RelaxedProblem, steps: int = DEFAULT_CG_STEPS):
    """Run continuous greedy, returning ``(z, objective per step, lp evals)``."""
    if np.any(p.c_lower < 0):
        raise ValueError("costs must be non-negative")
    mu = np.ascontiguousarray(p.mu_bar)
    c = np.ascontiguousarray(p.c_lower)
    return _kernels.continuous_greedy(mu, c, int(p.N), float(p.rho), int(steps))


def solve(p: RelaxedProblem, steps: int = DEFAULT_CG_STEPS) -> SolveReport:
    if p.model is RewardModel.AWC:
        return solve_awc(p, steps)
    if p.model is RewardModel.SUC:
        return solve_suc(p)
    return solve_aic(p)
