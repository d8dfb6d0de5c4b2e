"""Local-server estimator: running means and Hoeffding-style bounds."""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np

from .env import RoundOutcome

PI2 = math.pi ** 2


def confidence_radius(t, K: int, delta: float, count):
    """``sqrt(ln(2 pi^2 K t^3 / (3 delta)) / (2 count))``; infinite at count 0.

    Vectorised over ``count``.
    """
    if t < 1 or K < 1 or not 0 < delta <= 1:
        raise ValueError(f"need t >= 1, K >= 1, 0 < delta <= 1; got t={t}, K={K}, delta={delta}")
    log_term = math.log(2.0 * PI2 * K * float(t) ** 3 / (3.0 * delta))
    count = np.asarray(count, dtype=float)
    with np.errstate(divide="ignore"):
        out = np.sqrt(log_term / (2.0 * count))
    out = np.where(count > 0, out, np.inf)
    return float(out) if out.ndim == 0 else out


@dataclass
class EstimatorState:
    mu_hat: np.ndarray
    c_hat: np.ndarray
    n_mu: np.ndarray
    n_c: np.ndarray
    alpha_mu: float
    alpha_c: float
    delta: float
    t: int = 1

    @classmethod
    def initial(cls, K: int, alpha_mu: float, alpha_c: float, delta: float) -> "EstimatorState":
        return cls(
            mu_hat=np.zeros(K),
            c_hat=np.zeros(K),
            n_mu=np.zeros(K, dtype=np.int64),
            n_c=np.zeros(K, dtype=np.int64),
            alpha_mu=float(alpha_mu),
            alpha_c=float(alpha_c),
            delta=float(delta),
        )

    @property
    def K(self) -> int:
        return self.mu_hat.shape[0]

    def copy(self) -> "EstimatorState":
        return replace(
            self,
            mu_hat=self.mu_hat.copy(),
            c_hat=self.c_hat.copy(),
            n_mu=self.n_mu.copy(),
            n_c=self.n_c.copy(),
        )

    def reward_ucbs(self) -> np.ndarray:
        rad = confidence_radius(self.t, self.K, self.delta, self.n_mu)
        return np.minimum(self.mu_hat + self.alpha_mu * rad, 1.0)

    def cost_lcbs(self) -> np.ndarray:
        rad = confidence_radius(self.t, self.K, self.delta, self.n_c)
        return np.maximum(self.c_hat - self.alpha_c * rad, 0.0)

    def absorb(self, outcome: RoundOutcome, observe_all_costs: bool = False) -> None:
        """In-place running-mean update for the arms the round revealed."""
        for k, x in zip(outcome.used, outcome.rewards):
            n = self.n_mu[k]
            self.mu_hat[k] = (n * self.mu_hat[k] + x) / (n + 1)
            self.n_mu[k] = n + 1
        if observe_all_costs and outcome.action_costs is not None:
            arms, costs = outcome.action, outcome.action_costs
        else:
            arms, costs = outcome.used, outcome.costs
        for k, y in zip(arms, costs):
            n = self.n_c[k]
            self.c_hat[k] = (n * self.c_hat[k] + y) / (n + 1)
            self.n_c[k] = n + 1
        self.t += 1

    # checkpoint record: one header line, then arm,mu_hat,c_hat,n_mu,n_c
    def dumps(self) -> str:
        buf = io.StringIO()
        buf.write(f"# t={self.t} alpha_mu={self.alpha_mu!r} alpha_c={self.alpha_c!r} delta={self.delta!r}\n")
        buf.write("arm,mu_hat,c_hat,n_mu,n_c\n")
        for k in range(self.K):
            buf.write(f"{k},{float(self.mu_hat[k])!r},{float(self.c_hat[k])!r},{int(self.n_mu[k])},{int(self.n_c[k])}\n")
        return buf.getvalue()

    @classmethod
    def loads(cls, text: str) -> "EstimatorState":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("#"):
            raise ValueError("state record must start with a '# t=...' header")
        header = dict(tok.split("=", 1) for tok in lines[0][1:].split())
        rows = [ln.split(",") for ln in lines[2:]]
        if [int(r[0]) for r in rows] != list(range(len(rows))):
            raise ValueError("state record arms must be listed 0..K-1 in order")
        return cls(
            mu_hat=np.array([float(r[1]) for r in rows]),
            c_hat=np.array([float(r[2]) for r in rows]),
            n_mu=np.array([int(r[3]) for r in rows], dtype=np.int64),
            n_c=np.array([int(r[4]) for r in rows], dtype=np.int64),
            alpha_mu=float(header["alpha_mu"]),
            alpha_c=float(header["alpha_c"]),
            delta=float(header["delta"]),
            t=int(header["t"]),
        )


def reward_ucb(state: EstimatorState, k: int) -> float:
    rad = confidence_radius(state.t, state.K, state.delta, state.n_mu[k])
    return float(min(state.mu_hat[k] + state.alpha_mu * rad, 1.0))


def cost_lcb(state: EstimatorState, k: int) -> float:
    rad = confidence_radius(state.t, state.K, state.delta, state.n_c[k])
    return float(max(state.c_hat[k] - state.alpha_c * rad, 0.0))


def update(state: EstimatorState, outcome: RoundOutcome, observe_all_costs: bool = False) -> EstimatorState:
    """Return a new state with ``outcome`` folded in; ``state`` is untouched."""
    new = state.copy()
    new.absorb(outcome, observe_all_costs)
    return new


@dataclass
class FeedbackBatch:
    capacity: int
    buffered: List[RoundOutcome] = field(default_factory=list)

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError(f"batch capacity must be >= 1, got {self.capacity}")

    def add(self, outcome: RoundOutcome) -> Optional[List[RoundOutcome]]:
        self.buffered.append(outcome)
        if len(self.buffered) >= self.capacity:
            out, self.buffered = self.buffered, []
            return out
        return None


def buffer_and_maybe_flush(batch: FeedbackBatch, outcome: RoundOutcome) -> Optional[List[RoundOutcome]]:
    return batch.add(outcome)
