"""Line-oriented ``key = value`` experiment configuration.

Blank lines and ``#`` comments are ignored.  ``policy`` may be repeated
(or hold several whitespace-separated keys); every other key may appear
once.  ``instance = <path>`` pulls instance keys from another file of the
same format, resolved relative to the including file; keys in the
including file win.

Keys::

    preset            synthetic-awc-d3 | synthetic-suc-d3 | synthetic-aic-d3 | table3-llms
    k, n, rho, model  custom synthetic instance (model: awc | suc | aic); rho/model
                      may also override a preset
    instance_seed     seed of the synthetic instance draw (alias ``seed`` inside an
                      instance file)
    reward_dist       bernoulli | levels
    arm.<i>.mu        override the mean of arm i
    arm.<i>.cost      override the expected cost of arm i (token scale re-solved)
    policy            c2mabv | c2mabv-direct | cucb | eps-greedy | thompson | fixed:<i+j+..>
    T, replications, seed
    alpha_mu, alpha_c, delta (number or ``auto`` for 1/T), cg_steps
    batch_size, cascade_order (lcb | index | random)
    observe_all_costs, warmup, log_messages   true | false
    out               output directory
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional

import numpy as np

from ._validation import ConfigError
from .core import RewardModel
from .env import (
    ArmSpec,
    Environment,
    RewardDist,
    get_preset,
    make_synthetic_instance,
    solve_cost_scale,
)


@dataclass
class ExperimentConfig:
    preset: Optional[str] = None
    k: Optional[int] = None
    n: Optional[int] = None
    rho: Optional[float] = None
    model: Optional[str] = None
    instance_seed: int = 0
    reward_dist: Optional[str] = None
    arm_overrides: Dict[int, Dict[str, float]] = field(default_factory=dict)
    policies: List[str] = field(default_factory=lambda: ["c2mabv"])
    T: int = 1000
    replications: int = 1
    seed: int = 0
    alpha_mu: float = 0.3
    alpha_c: float = 0.01
    delta: Optional[float] = None
    batch_size: int = 1
    cascade_order: str = "lcb"
    cg_steps: int = 100
    observe_all_costs: bool = False
    warmup: bool = False
    out: str = "results"
    log_messages: bool = False

    def validate(self) -> "ExperimentConfig":
        if self.T < 1:
            raise ConfigError("T must be >= 1")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if not (self.alpha_mu > 0 and self.alpha_c > 0):
            raise ConfigError("alpha_mu and alpha_c must be positive")
        if self.delta is not None and not 0 < self.delta <= 1:
            raise ConfigError("delta must lie in (0, 1]")
        if self.cg_steps < 1:
            raise ConfigError("cg_steps must be >= 1")
        if self.cascade_order not in ("lcb", "index", "random"):
            raise ConfigError(f"unknown cascade_order {self.cascade_order!r}")
        if not self.policies:
            raise ConfigError("at least one policy is required")
        if self.seed < 0 or self.instance_seed < 0:
            raise ConfigError("seeds must be non-negative")
        try:
            if self.model is not None:
                self.model = RewardModel.parse(self.model).value
            if self.reward_dist is not None:
                self.reward_dist = RewardDist.parse(self.reward_dist).value
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.preset is None and None in (self.k, self.n, self.rho, self.model):
            raise ConfigError("give either a preset or all of k, n, rho, model")
        if self.preset is not None and (self.k is not None or self.n is not None):
            raise ConfigError("k and n cannot override a preset")
        return self

    def describe(self) -> str:
        if self.preset:
            return self.preset
        return f"synthetic K={self.k} N={self.n} rho={self.rho} model={self.model} seed={self.instance_seed}"


def _bool(v: str) -> bool:
    s = v.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _delta(v: str):
    return None if v.strip().lower() in ("auto", "none", "") else float(v)


_SCALARS = {
    "preset": str,
    "k": int,
    "n": int,
    "rho": float,
    "model": str,
    "instance_seed": int,
    "reward_dist": str,
    "T": int,
    "replications": int,
    "seed": int,
    "alpha_mu": float,
    "alpha_c": float,
    "delta": _delta,
    "batch_size": int,
    "cascade_order": str,
    "cg_steps": int,
    "observe_all_costs": _bool,
    "warmup": _bool,
    "out": str,
    "log_messages": _bool,
}
_INSTANCE_KEYS = {"preset", "k", "n", "rho", "model", "instance_seed", "reward_dist"}


def parse_pairs(text: str, source: str = "<config>"):
    """``(lineno, key, value)`` triples from ``key = value`` text."""
    out = []
    for i, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{i}: expected key = value, got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in ("t", "horizon"):
            key = "T"
        out.append((i, key, value))
    return out


def _read(path: str) -> str:
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None


def _instance_pairs(path: str):
    pairs = []
    for i, key, value in parse_pairs(_read(path), path):
        if key == "seed":
            key = "instance_seed"
        if key not in _INSTANCE_KEYS and not key.startswith("arm."):
            raise ConfigError(f"{path}:{i}: key {key!r} is not an instance key")
        pairs.append((i, key, value))
    return pairs


def loads(text: str, source: str = "<config>", base_dir: str = ".") -> ExperimentConfig:
    pairs = parse_pairs(text, source)
    included = []
    for i, key, value in pairs:
        if key == "instance":
            included = _instance_pairs(os.path.join(base_dir, value))
    own = {key for _, key, _ in pairs}
    merged = [(i, k, v, "instance file") for i, k, v in included if k not in own]
    merged += [(i, k, v, source) for i, k, v in pairs if k != "instance"]

    cfg = ExperimentConfig()
    seen = set()
    policies: List[str] = []
    for i, key, value, src in merged:
        where = f"{src}:{i}"
        if key == "policy":
            policies.extend(value.split())
            continue
        if key in seen:
            raise ConfigError(f"{where}: duplicate key {key!r}")
        seen.add(key)
        if key.startswith("arm."):
            parts = key.split(".")
            if len(parts) != 3 or parts[2] not in ("mu", "cost") or not parts[1].isdigit():
                raise ConfigError(f"{where}: arm overrides look like arm.<i>.mu or arm.<i>.cost, got {key!r}")
            try:
                cfg.arm_overrides.setdefault(int(parts[1]), {})[parts[2]] = float(value)
            except ValueError:
                raise ConfigError(f"{where}: {key} needs a number, got {value!r}") from None
            continue
        conv = _SCALARS.get(key)
        if conv is None:
            raise ConfigError(f"{where}: unknown key {key!r}")
        try:
            setattr(cfg, key, conv(value))
        except ValueError as exc:
            raise ConfigError(f"{where}: bad value for {key}: {exc}") from None
    if policies:
        cfg.policies = policies
    return cfg.validate()


def load_config(path: str) -> ExperimentConfig:
    return loads(_read(path), path, os.path.dirname(os.path.abspath(path)))


def _apply_overrides(specs: List[ArmSpec], overrides) -> List[ArmSpec]:
    specs = list(specs)
    for i, fields in sorted(overrides.items()):
        if not 0 <= i < len(specs):
            raise ConfigError(f"arm override index {i} out of range [0, {len(specs)})")
        s = specs[i]
        if "mu" in fields:
            s = replace(s, true_mu=fields["mu"])
        if "cost" in fields:
            scale = solve_cost_scale(fields["cost"], s.cost_per_token, s.input_len_range, s.output_len_mean)
            s = replace(s, cost_scale=scale)
        specs[i] = s
    return specs


def build_environment(cfg: ExperimentConfig) -> Environment:
    """The (replication-independent) environment a config describes."""
    try:
        if cfg.preset is not None:
            p = get_preset(cfg.preset)
            inst, specs = p.build(seed=cfg.instance_seed, model=cfg.model, rho=cfg.rho)
            dist = cfg.reward_dist or p.reward_dist
        else:
            rng = np.random.default_rng(cfg.instance_seed)
            inst, specs = make_synthetic_instance(cfg.k, cfg.n, cfg.rho, cfg.model, rng)
            dist = cfg.reward_dist or RewardDist.BERNOULLI
        specs = _apply_overrides(specs, cfg.arm_overrides)
        return Environment(inst, specs, dist)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

