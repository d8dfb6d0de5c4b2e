"""Regret, budget violation, reward/violation ratio and per-round records."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np

CSV_COLUMNS = [
    "t",
    "policy",
    "action",
    "used",
    "exp_reward",
    "realized_reward",
    "used_cost",
    "worst_cost",
    "cum_regret_structural",
    "cum_regret_budgeted",
    "violation",
    "ratio",
]

O_STAR_FLOOR = 0.05


def violation(cost_series: Sequence[float], rho: float, T: int | None = None) -> float:
    """``max(mean per-round cost - rho, 0)`` over the first ``T`` rounds."""
    costs = np.asarray(cost_series, dtype=float)
    T = costs.shape[0] if T is None else T
    if T < 1:
        raise ValueError("T must be >= 1")
    return max(float(costs[:T].sum()) / T - rho, 0.0)


def regret(expected_rewards: Sequence[float], optimal_value: float, alpha: float, T: int | None = None) -> float:
    """Cumulative ``alpha * opt - r(S_t; mu)`` over the first ``T`` rounds."""
    r = np.asarray(expected_rewards, dtype=float)
    T = r.shape[0] if T is None else T
    return float(np.sum(alpha * optimal_value - r[:T]))


def ratio(exp_rewards: Sequence[float], violations: Sequence[float], t: int | None = None) -> float:
    """Average reward over average violation up to round ``t``; ``inf`` at zero."""
    r = np.asarray(exp_rewards, dtype=float)
    v = np.asarray(violations, dtype=float)
    t = r.shape[0] if t is None else t
    if t < 1:
        raise ValueError("t must be >= 1")
    den = float(v[:t].sum())
    if den == 0.0:
        return math.inf
    return float(r[:t].sum()) / den


def theorem_bounds(K: int, N: int, T: int, L: float = 1.0, r_star: float = 1.0, o_star: float = 1.0, rho=None):
    """High-probability regret and worst-case violation bounds at horizon T.

    ``rho`` is accepted for call-site symmetry; neither bound depends on it.
    """
    for name, v in (("K", K), ("N", N), ("T", T), ("L", L), ("o_star", o_star)):
        if not v > 0:
            raise ValueError(f"{name} must be positive")
    log_term = math.log(2.0 * math.pi ** 2 * K * T / 3.0)
    regret_bound = (2.0 * L / o_star) * math.sqrt(2.0 * N * K * T * log_term) + (K + 1) * r_star
    s = math.sqrt(N * K / T)
    violation_bound = s * (2.0 * math.sqrt(2.0 * log_term) + s)
    return regret_bound, violation_bound


def estimate_o_star(records: Sequence["RoundRecord"]) -> float:
    """Share of rounds where every selected arm was observed, floored."""
    if not records:
        return 1.0
    full = sum(1 for r in records if len(r.used) == len(r.action))
    return max(full / len(records), O_STAR_FLOOR)


@dataclass
class RoundRecord:
    t: int
    policy: str
    action: tuple
    used: tuple
    exp_reward: float
    realized_reward: float
    used_cost: float
    worst_cost: float
    cum_regret_structural: float
    cum_regret_budgeted: float
    violation: float
    ratio: float


def fmt(x: float) -> str:
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".9g")


def join_ids(ids) -> str:
    return "+".join(str(k) for k in sorted(ids))


def record_row(r: RoundRecord) -> List[str]:
    return [
        str(r.t),
        r.policy,
        join_ids(r.action),
        join_ids(r.used),
        fmt(r.exp_reward),
        fmt(r.realized_reward),
        fmt(r.used_cost),
        fmt(r.worst_cost),
        fmt(r.cum_regret_structural),
        fmt(r.cum_regret_budgeted),
        fmt(r.violation),
        fmt(r.ratio),
    ]


def write_csv(path, records: Sequence[RoundRecord]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in records:
            w.writerow(record_row(r))


def read_csv(path) -> Dict[str, np.ndarray]:
    """Numeric columns of a run CSV as float arrays (``inf`` parsed)."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = {}
    for col in CSV_COLUMNS:
        if col in ("policy", "action", "used"):
            out[col] = np.array([row[col] for row in rows])
        else:
            out[col] = np.array([float(row[col]) for row in rows])
    return out


class MetricTracker:
    """Turns a stream of rounds into :class:`RoundRecord` rows."""

    def __init__(self, policy: str, mu, rho: float, alpha: float, opt_structural: float, opt_budgeted: float, model):
        from .core import RewardModel

        self.policy = policy
        self.mu = np.asarray(mu, dtype=float)
        self.rho = rho
        self.alpha = alpha
        self.opt_structural = opt_structural
        self.opt_budgeted = opt_budgeted
        self.model = RewardModel.parse(model)
        self.records: List[RoundRecord] = []
        self._reg_s = 0.0
        self._reg_b = 0.0
        self._cost = 0.0
        self._worst = 0.0
        self._rsum = 0.0
        self._vsum = 0.0

    def realized(self, rewards) -> float:
        from .core import RewardModel

        x = list(rewards)
        if not x:
            return 0.0
        if self.model is RewardModel.AWC:
            return float(max(x))
        if self.model is RewardModel.SUC:
            return float(math.fsum(x))
        return float(np.prod(x))

    def add(self, t: int, action, used, rewards, used_cost: float, worst_cost: float) -> RoundRecord:
        from .core import action_reward

        r = action_reward(self.model, action, self.mu)
        self._reg_s += self.alpha * self.opt_structural - r
        self._reg_b += self.alpha * self.opt_budgeted - r
        self._cost += used_cost
        self._worst += worst_cost
        v = max(self._cost / t - self.rho, 0.0)
        self._rsum += r
        self._vsum += v
        rec = RoundRecord(
            t=t,
            policy=self.policy,
            action=tuple(action),
            used=tuple(used),
            exp_reward=r,
            realized_reward=self.realized(rewards),
            used_cost=float(used_cost),
            worst_cost=float(worst_cost),
            cum_regret_structural=self._reg_s,
            cum_regret_budgeted=self._reg_b,
            violation=v,
            ratio=math.inf if self._vsum == 0.0 else self._rsum / self._vsum,
        )
        self.records.append(rec)
        return rec


@dataclass
class RunSummary:
    policy: str
    replication: int
    seed: int
    instance: str
    records: List[RoundRecord] = field(repr=False)
    rho: float
    wall_clock: float = 0.0

    @property
    def T(self) -> int:
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    @property
    def final_regret(self) -> float:
        return self.records[-1].cum_regret_budgeted

    @property
    def final_violation(self) -> float:
        return self.records[-1].violation

    def worst_violation(self, t: int | None = None) -> float:
        return violation(self.column("worst_cost"), self.rho, t)

    @property
    def final_ratio(self) -> float:
        return self.records[-1].ratio

    @property
    def mean_reward(self) -> float:
        return float(self.column("exp_reward").mean())
