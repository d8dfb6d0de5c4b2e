"""Exhaustive reference optimisers.

Used for the regret baselines, as test oracles, and as the per-round
enumeration policy that skips relaxation entirely.  Deliberately naive.
"""
from __future__ import annotations

import itertools
from functools import lru_cache
from math import comb
from typing import Tuple

import numpy as np

from .core import ActionSet, ProblemInstance, RewardModel

MAX_SUBSETS = 5_000_000
TIE_TOL = 1e-12


class SizeGuardError(RuntimeError):
    """The instance has too many candidate subsets to enumerate."""


@lru_cache(maxsize=32)
def _combos(K: int, n: int) -> np.ndarray:
    dtype = np.int8 if K < 128 else np.int32
    flat = np.fromiter(itertools.chain.from_iterable(itertools.combinations(range(K), n)), dtype=dtype, count=comb(K, n) * n)
    out = flat.reshape(-1, n) if n else np.zeros((1, 0), dtype=dtype)
    out.setflags(write=False)
    return out


def _sizes(model: RewardModel, N: int):
    return [N] if model.exact_cardinality else list(range(1, N + 1))


def subset_count(K: int, N: int, model) -> int:
    return sum(comb(K, n) for n in _sizes(RewardModel.parse(model), N))


def _guard(K: int, N: int, model: RewardModel) -> None:
    total = subset_count(K, N, model)
    if total > MAX_SUBSETS:
        raise SizeGuardError(
            f"{total} candidate subsets for K={K}, N={N} exceeds the enumeration limit {MAX_SUBSETS}; "
            "use a smaller instance or a relaxation-based policy"
        )


def _values(model: RewardModel, mu: np.ndarray, combos: np.ndarray) -> np.ndarray:
    m = mu[combos]
    if model is RewardModel.AWC:
        return 1.0 - np.prod(1.0 - m, axis=1)
    if model is RewardModel.SUC:
        return m.sum(axis=1)
    return np.prod(m, axis=1)


def _search(model, mu, N, c=None, rho=None) -> Tuple[ActionSet, float]:
    model = RewardModel.parse(model)
    mu = np.asarray(mu, dtype=float)
    K = mu.shape[0]
    if not 1 <= N <= K:
        raise ValueError(f"need 1 <= N <= K, got N={N}, K={K}")
    _guard(K, N, model)
    best_val = -np.inf
    best: ActionSet | None = None
    for n in _sizes(model, N):
        combos = _combos(K, n)
        vals = _values(model, mu, combos)
        if c is not None:
            vals = np.where(np.asarray(c)[combos].sum(axis=1) <= rho, vals, -np.inf)
        top = vals.max()
        if not np.isfinite(top):
            continue
        # first hit within a block is its lexicographically smallest set
        cand = tuple(int(k) for k in combos[int(np.argmax(vals >= top - TIE_TOL))])
        if best is None or top > best_val + TIE_TOL:
            best_val, best = float(top), cand
        elif top >= best_val - TIE_TOL and cand < best:
            best_val, best = max(best_val, float(top)), cand
    if best is None:
        return (), 0.0
    return best, float(best_val)


def best_action(model, mu, N: int) -> Tuple[ActionSet, float]:
    """Exact argmax of the reward over cardinality-feasible sets."""
    return _search(model, mu, N)


def best_budgeted_action(model, mu, c, N: int, rho: float) -> Tuple[ActionSet, float]:
    """Exact argmax subject also to ``sum(c[S]) <= rho``.

    Returns ``((), 0.0)`` when no set satisfies both constraints.
    """
    c = np.asarray(c, dtype=float)
    if c.shape != np.shape(mu):
        raise ValueError("mu and c must have the same length")
    return _search(model, mu, N, c=c, rho=float(rho))


def direct_policy_select(state, inst: ProblemInstance) -> ActionSet:
    """Enumerate the budgeted problem at the current optimistic estimates.

    When no set meets the budget it falls back to the cheapest feasible
    choice by cost lower bound: one arm for AWC, N arms otherwise.
    """
    mu_bar = state.reward_ucbs()
    c_low = state.cost_lcbs()
    S, _ = best_budgeted_action(inst.model, mu_bar, c_low, inst.N, inst.rho)
    if not S:
        n = inst.N if inst.model.exact_cardinality else 1
        S = tuple(sorted(int(k) for k in np.argsort(c_low, kind="stable")[:n]))
    return S
