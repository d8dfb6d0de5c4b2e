"""The online round loop, replications, message log and replay.

One round, local server then scheduling cloud then user::

    local   z = policy.decision_function()        -> "z_tilde" message
    cloud   S = round_selection(z)                -> "action" message
    user    outcome = env.execute(S)              -> "feedback" message
    local   buffer outcome; on flush, policy.partial_fit(batch)

With ``batch_size > 1`` the local side only ships a new ``z`` after a
flush; in between the cloud keeps replaying the previous action.
"""
from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy import stats

from .baselines import BasePolicy, make_policy
from .config import ExperimentConfig, build_environment
from .env import Environment
from .learner import FeedbackBatch
from .metrics import CSV_COLUMNS, MetricTracker, RoundRecord, RunSummary, fmt, write_csv
from .oracle import best_action, best_budgeted_action
from .rounding import round_selection

log = logging.getLogger(__name__)

LOCAL_TO_CLOUD = "local→cloud"
CLOUD_TO_LOCAL = "cloud→local"
USER_TO_LOCAL = "user→local"

AGG_METRICS = [c for c in CSV_COLUMNS if c not in ("t", "policy", "action", "used")]


@dataclass
class Streams:
    env: np.random.Generator
    rounding: np.random.Generator
    policy: np.random.Generator


def replication_streams(seed: int, replication: int) -> Streams:
    """Independent env / rounding / policy generators for one replication."""
    env, rnd, pol = np.random.SeedSequence(seed + replication).spawn(3)
    return Streams(np.random.default_rng(env), np.random.default_rng(rnd), np.random.default_rng(pol))


_OPT_CACHE: Dict[tuple, tuple] = {}


def optimal_values(env: Environment):
    """``(structural, budgeted)`` optimal expected rewards at the true means.

    ``budgeted`` is nan when no feasible set fits the budget at the true
    expected costs; the budgeted regret column is then undefined.
    """
    inst = env.inst
    key = (inst, env.mu.tobytes(), env.expected_costs.tobytes())
    if key not in _OPT_CACHE:
        _, structural = best_action(inst.model, env.mu, inst.N)
        S, budgeted = best_budgeted_action(inst.model, env.mu, env.expected_costs, inst.N, inst.rho)
        if not S:
            log.warning("no action meets rho=%g at the true costs; budgeted regret is nan", inst.rho)
            budgeted = float("nan")
        _OPT_CACHE[key] = (structural, budgeted)
    return _OPT_CACHE[key]


class MessageLog:
    """Append-only JSON-lines record of the local/cloud/user exchange."""

    def __init__(self, fh):
        self.fh = fh

    def emit(self, t: int, direction: str, kind: str, **payload):
        rec = {"t": t, "dir": direction, "kind": kind}
        rec.update(payload)
        self.fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def _floats(x) -> List[float]:
    return [float(v) for v in x]


class Simulation:
    """Single replication of one policy; advance with :func:`run_round`."""

    def __init__(self, policy: BasePolicy, env: Environment, streams: Streams, horizon: int,
                 batch_size: int = 1, name: Optional[str] = None, message_log: Optional[MessageLog] = None):
        self.env = env
        self.inst = env.inst
        self.streams = streams
        self.policy = policy.fit(env.inst, horizon=horizon, rng=streams.policy)
        self.name = name or policy.name
        self.batch = FeedbackBatch(batch_size)
        self.log = message_log
        structural, budgeted = optimal_values(env)
        self.tracker = MetricTracker(self.name, env.mu, self.inst.rho, self.inst.alpha, structural, budgeted,
                                     self.inst.model)
        self.t = 1
        self.action = None
        self.fresh = True
        self.fallback_rounds = 0

    def step(self) -> RoundRecord:
        t = self.t
        inst = self.inst
        if self.fresh:
            # local server: only z leaves this block
            z = self.policy.decision_function()
            report = self.policy.last_report_
            status = report.status if report is not None else "indicator"
            if status == "infeasible_fallback":
                self.fallback_rounds += 1
            if self.log:
                self.log.emit(t, LOCAL_TO_CLOUD, "z_tilde", values=_floats(z), status=status)
            # scheduling cloud
            self.action = round_selection(z, inst.model, inst.N, self.streams.rounding)
            self.fresh = False
        if self.log:
            self.log.emit(t, CLOUD_TO_LOCAL, "action", members=list(self.action))
        order = self.policy.query_order()
        outcome = self.env.execute(self.action, order, self.streams.env)
        if self.log:
            self.log.emit(
                t, USER_TO_LOCAL, "feedback",
                used=list(outcome.used),
                rewards=_floats(outcome.rewards),
                costs=_floats(outcome.costs),
                worst_cost=outcome.total_worstcase_cost,
            )
        flushed = self.batch.add(outcome)
        if flushed is not None:
            self.policy.partial_fit(flushed)
            self.fresh = True
        rec = self.tracker.add(t, outcome.action, outcome.used, outcome.rewards,
                               outcome.total_used_cost, outcome.total_worstcase_cost)
        self.t += 1
        return rec


def run_round(sim: Simulation) -> RoundRecord:
    return sim.step()


def simulate(policy: BasePolicy, env: Environment, T: int, seed: int = 0, replication: int = 0,
             batch_size: int = 1, name: Optional[str] = None, message_log: Optional[MessageLog] = None,
             instance: str = "") -> RunSummary:
    streams = replication_streams(seed, replication)
    start = time.perf_counter()
    sim = Simulation(policy, env, streams, T, batch_size, name, message_log)
    for _ in range(T):
        sim.step()
    elapsed = time.perf_counter() - start
    if sim.fallback_rounds:
        log.info("%s rep %d: %d rounds used the infeasible-budget fallback", sim.name, replication,
                 sim.fallback_rounds)
    return RunSummary(policy=sim.name, replication=replication, seed=seed + replication, instance=instance,
                      records=sim.tracker.records, rho=env.inst.rho, wall_clock=elapsed)


def replay(lines: Sequence[str], env: Environment, policy_name: str) -> List[RoundRecord]:
    """Rebuild the per-round records from a message log alone."""
    structural, budgeted = optimal_values(env)
    inst = env.inst
    tracker = MetricTracker(policy_name, env.mu, inst.rho, inst.alpha, structural, budgeted, inst.model)
    action = None
    for line in lines:
        if not line.strip():
            continue
        msg = json.loads(line)
        if msg["kind"] == "action":
            action = tuple(msg["members"])
        elif msg["kind"] == "feedback":
            if action is None:
                raise ValueError(f"feedback at t={msg['t']} before any action message")
            costs = np.array(msg["costs"], dtype=float)
            tracker.add(msg["t"], action, tuple(msg["used"]), msg["rewards"], float(costs.sum()),
                        float(msg["worst_cost"]))
    return tracker.records


def safe_name(policy: str) -> str:
    return policy.replace(":", "-").replace(",", "+").replace("/", "_")


def run_csv_path(out: str, policy: str, replication: int) -> str:
    return os.path.join(out, f"{safe_name(policy)}_rep{replication}.csv")


def log_path(out: str, policy: str, replication: int) -> str:
    return os.path.join(out, f"{safe_name(policy)}_rep{replication}.messages.jsonl")


def aggregate(summaries: Sequence[RunSummary]):
    """Per-round mean and 95% t-interval across replications of one policy."""
    cols = {m: np.vstack([s.column(m) for s in summaries]) for m in AGG_METRICS}
    n = len(summaries)
    q = stats.t.ppf(0.975, n - 1) if n > 1 else np.nan
    out = {}
    with np.errstate(invalid="ignore"):
        for m, X in cols.items():
            mean = X.mean(axis=0)
            half = q * X.std(axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.full(X.shape[1], np.nan)
            out[m] = (mean, mean - half, mean + half)
    return out


def write_aggregate(path: str, by_policy: Dict[str, List[RunSummary]]) -> None:
    header = ["t", "policy", "n"]
    for m in AGG_METRICS:
        header += [f"{m}_mean", f"{m}_lo", f"{m}_hi"]
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for policy, runs in by_policy.items():
            agg = aggregate(runs)
            for i in range(runs[0].T):
                row = [str(i + 1), policy, str(len(runs))]
                for m in AGG_METRICS:
                    row += [fmt(float(v[i])) for v in agg[m]]
                fh.write(",".join(row) + "\n")


def write_timings(path: str, by_policy: Dict[str, List[RunSummary]]) -> None:
    with open(path, "w") as fh:
        fh.write("policy,replication,T,wall_clock_s\n")
        for policy, runs in by_policy.items():
            for r in runs:
                fh.write(f"{policy},{r.replication},{r.T},{r.wall_clock:.6f}\n")


def build_policy(cfg: ExperimentConfig, key: str) -> BasePolicy:
    return make_policy(key, cfg.alpha_mu, cfg.alpha_c, cfg.delta, cfg.cg_steps, cfg.cascade_order,
                       cfg.observe_all_costs, cfg.warmup)


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> Dict[str, List[RunSummary]]:
    """Run every (policy, replication) pair and write CSV outputs to ``cfg.out``."""
    cfg.validate()
    env = build_environment(cfg)
    policies = {key: build_policy(cfg, key) for key in cfg.policies}
    if write:
        os.makedirs(cfg.out, exist_ok=True)
    results: Dict[str, List[RunSummary]] = {}
    for key, policy in policies.items():
        runs = []
        for i in range(cfg.replications):
            fh = None
            mlog = None
            if write and cfg.log_messages:
                fh = open(log_path(cfg.out, key, i), "w", encoding="utf-8")
                mlog = MessageLog(fh)
            try:
                summary = simulate(policy, env, cfg.T, cfg.seed, i, cfg.batch_size, key, mlog, cfg.describe())
            finally:
                if fh is not None:
                    fh.close()
            if write:
                write_csv(run_csv_path(cfg.out, key, i), summary.records)
            runs.append(summary)
        results[key] = runs
    if write:
        write_aggregate(os.path.join(cfg.out, "aggregate.csv"), results)
        write_timings(os.path.join(cfg.out, "timings.csv"), results)
    return results
