"""Scheduling-cloud rounding of a fractional selection into an action.

The cloud only ever sees the fractional vector, never raw feedback.

* :func:`swap_round` (AWC): decompose the point into sets of size at most
  N, then merge them pairwise with randomized exchanges.
* :func:`dependent_round` (SUC/AIC): repeatedly move mass between two
  fractional coordinates until all are integral.

Both preserve marginals: ``E[indicator(S)] == z``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List

import numpy as np

from . import _kernels
from ._validation import check_fractional, check_rng
from .core import ActionSet, RewardModel

TOL = 1e-9


@dataclass
class Decomposition:
    weights: np.ndarray
    sets: List[ActionSet]

    def reconstruct(self, K: int) -> np.ndarray:
        out = np.zeros(K)
        for v, B in zip(self.weights, self.sets):
            out[list(B)] += v
        return out


def _check_polytope(z, N: int) -> np.ndarray:
    z = check_fractional(z)
    if z.sum() > N + TOL:
        raise ValueError(f"sum of z is {z.sum():.12g}, exceeds N={N}")
    return z


def _decompose_arrays(z: np.ndarray, N: int):
    return _kernels.decompose(np.ascontiguousarray(z), int(N))


def decompose(z, N: int) -> Decomposition:
    """Convex combination of sets of size <= N reproducing ``z``."""
    z = _check_polytope(z, N)
    weights, mask = _decompose_arrays(z, N)
    sets = [tuple(int(k) for k in np.flatnonzero(row)) for row in mask]
    return Decomposition(weights=weights.copy(), sets=sets)


def swap_round(z, N: int, rng=None, size: int | None = None):
    """Round a point of ``{0 <= z <= 1, sum z <= N}`` to a set of size <= N.

    With ``size`` given, returns a boolean ``(size, K)`` membership matrix of
    independent draws instead of one action.
    """
    z = _check_polytope(z, N)
    rng = check_rng(rng)
    weights, mask = _decompose_arrays(z, N)
    L = weights.shape[0]
    n_u = max(L - 1, 0) * N
    if size is None:
        if L == 1:
            return tuple(int(k) for k in np.flatnonzero(mask[0]))
        row = _kernels.swap_merge(weights, mask, int(N), rng.random(n_u))
        return tuple(int(k) for k in np.flatnonzero(row))
    U = rng.random((int(size), max(n_u, 1)))
    return _kernels.swap_round_many(weights, mask, int(N), U)


def dependent_round(z, rng=None, size: int | None = None):
    """Pairwise dependent rounding of a point of ``[0, 1]^K``.

    The coordinate sum is preserved at every pair update, so an integral
    sum yields exactly that many arms.  A single leftover fractional
    coordinate (non-integral sum) is rounded on its own with its marginal.
    """
    z = check_fractional(z)
    rng = check_rng(rng)
    K = z.shape[0]
    if size is None:
        frac = (z > TOL) & (z < 1.0 - TOL)
        if not frac.any():
            return tuple(int(k) for k in np.flatnonzero(z >= 1.0 - TOL))
        row, _ = _kernels.dependent_round(z, rng.random(K))
        return tuple(int(k) for k in np.flatnonzero(row))
    U = rng.random((int(size), K))
    return _kernels.dependent_round_many(z, U)


def dependent_round_pairs(z, rng=None) -> int:
    """Number of pair updates one rounding pass performs (diagnostic)."""
    z = check_fractional(z)
    rng = check_rng(rng)
    _, pairs = _kernels.dependent_round(z, rng.random(z.shape[0]))
    return int(pairs)


def round_selection(z, model, N: int, rng=None) -> ActionSet:
    """Cloud-side entry point: pick the rounder for ``model``."""
    model = RewardModel.parse(model)
    if model is RewardModel.AWC:
        return swap_round(z, N, rng)
    return dependent_round(z, rng)
