"""Domain types and reward functions shared by every other module.

Arms are 0-indexed.  An action is a sorted tuple of arm indices.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

import numpy as np

ActionSet = Tuple[int, ...]

#: floor applied to reward estimates before taking logarithms (AIC)
AIC_CLAMP = 1e-9


class RewardModel(str, enum.Enum):
    """Collaborative reward model of a multi-LLM task."""

    AWC = "awc"  # any win: 1 - prod(1 - mu)
    SUC = "suc"  # sum up: sum(mu)
    AIC = "aic"  # all in: prod(mu)

    @classmethod
    def parse(cls, value) -> "RewardModel":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(f"unknown reward model {value!r}; expected one of awc, suc, aic") from None

    @property
    def exact_cardinality(self) -> bool:
        """SUC and AIC play exactly N arms, AWC at most N."""
        return self is not RewardModel.AWC


@dataclass(frozen=True)
class ProblemInstance:
    """Static task definition: K arms, cardinality cap N, budget rho."""

    K: int
    N: int
    rho: float
    model: RewardModel

    def __post_init__(self):
        object.__setattr__(self, "model", RewardModel.parse(self.model))
        if not 1 <= self.N <= self.K:
            raise ValueError(f"need 1 <= N <= K, got N={self.N}, K={self.K}")
        if not self.rho > 0:
            raise ValueError(f"budget rho must be positive, got {self.rho}")

    @property
    def alpha(self) -> float:
        """Approximation ratio of the offline oracle used for regret."""
        if self.model is RewardModel.AWC:
            return 1.0 - 1.0 / math.e
        return 1.0


def as_action(members: Iterable[int], K: int | None = None) -> ActionSet:
    """Normalise ``members`` into a sorted duplicate-free tuple."""
    out = tuple(sorted({int(k) for k in members}))
    if K is not None and out and (out[0] < 0 or out[-1] >= K):
        raise ValueError(f"arm index out of range [0, {K}): {out}")
    return out


def _check_arms(S: Sequence[int], size: int) -> None:
    for k in S:
        if not 0 <= k < size:
            raise ValueError(f"arm index {k} out of range [0, {size})")


def action_reward(model, S: Sequence[int], mu) -> float:
    """Expected reward r(S; mu) of playing action ``S``."""
    model = RewardModel.parse(model)
    mu = np.asarray(mu, dtype=float)
    _check_arms(S, mu.shape[0])
    vals = mu[list(S)]
    if model is RewardModel.AWC:
        return float(1.0 - np.prod(1.0 - vals))
    if model is RewardModel.SUC:
        return float(np.sum(vals))
    return float(np.prod(vals))


def relaxed_reward(model, z, mu) -> float:
    """Continuous extension of :func:`action_reward` evaluated at ``z``.

    AWC uses the closed form of the multilinear extension, SUC the linear
    form and AIC the geometric form ``prod(mu ** z)``.
    """
    model = RewardModel.parse(model)
    z = np.asarray(z, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if z.shape != mu.shape:
        raise ValueError(f"shape mismatch: z {z.shape} vs mu {mu.shape}")
    if model is RewardModel.AWC:
        return float(1.0 - np.prod(1.0 - mu * z))
    if model is RewardModel.SUC:
        return float(mu @ z)
    active = z > 0
    if np.any(mu[active] <= 0.0):
        raise ValueError("AIC relaxed reward undefined: zero mean on an arm with positive weight")
    return float(np.exp(np.sum(z[active] * np.log(mu[active]))))


def is_feasible(S: Sequence[int], inst: ProblemInstance) -> bool:
    """Cardinality rule: ``|S| <= N`` for AWC, ``|S| == N`` otherwise."""
    if len(set(S)) != len(S) or any(not 0 <= k < inst.K for k in S):
        return False
    if inst.model.exact_cardinality:
        return len(S) == inst.N
    return len(S) <= inst.N


def indicator(S: Iterable[int], K: int) -> np.ndarray:
    z = np.zeros(K)
    z[list(S)] = 1.0
    return z
