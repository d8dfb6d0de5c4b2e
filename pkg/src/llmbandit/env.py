"""Synthetic multi-LLM environment.

Each arm has a mean reward and a token-based cost model: a query costs
``(l_in + l_out) * cost_per_token * cost_scale`` where ``l_in`` is uniform
on an integer range and ``l_out`` is Poisson, clipped to at most 1.

Every round draws a reward and a cost for *all* arms from the env stream
(common random numbers across policies); only the queried prefix is
revealed to the learner.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import List, Sequence, Tuple

import numpy as np
from scipy import optimize, stats

from ._validation import ConfigError, check_action, check_rng
from .core import ActionSet, ProblemInstance, RewardModel

LEVELS = np.array([0.0, 0.1, 0.3, 0.5])
# fixed masses on the "empty" (0.1) and "format ok" (0.3) outcomes
LEVEL_FIXED = 0.05
AWC_LEVEL_SUCCESS = 0.5

SYNTHETIC_INPUT_RANGE = (80, 120)
SYNTHETIC_OUTPUT_MEAN = 100.0
SYNTHETIC_PRICE = 1e-3


class RewardDist(str, enum.Enum):
    BERNOULLI = "bernoulli"
    LEVELS = "levels"

    @classmethod
    def parse(cls, value) -> "RewardDist":
        if isinstance(value, cls):
            return value
        v = str(value).strip().lower()
        if v in ("discrete", "discretelevels", "discrete_levels"):
            v = "levels"
        try:
            return cls(v)
        except ValueError:
            raise ConfigError(f"unknown reward distribution {value!r}") from None


def level_probs(mu: float) -> np.ndarray:
    """Probabilities over (0, 0.1, 0.3, 0.5) with mean ``mu``."""
    p5 = (mu - LEVEL_FIXED * (0.1 + 0.3)) / 0.5
    p0 = 1.0 - 2 * LEVEL_FIXED - p5
    if p5 < -1e-12 or p0 < -1e-12:
        lo = LEVEL_FIXED * 0.4
        hi = lo + 0.5 * (1.0 - 2 * LEVEL_FIXED)
        raise ConfigError(f"mean {mu} unreachable with discrete levels; need {lo:.2f} <= mu <= {hi:.2f}")
    return np.array([max(p0, 0.0), LEVEL_FIXED, LEVEL_FIXED, max(p5, 0.0)])


@dataclass(frozen=True)
class ArmSpec:
    true_mu: float
    cost_per_token: float
    input_len_range: Tuple[int, int]
    output_len_mean: float
    cost_scale: float = 1.0
    name: str = ""

    def __post_init__(self):
        a, b = self.input_len_range
        if not 0 <= a <= b:
            raise ConfigError(f"bad input length range {self.input_len_range}")
        if not 0.0 <= self.true_mu <= 1.0:
            raise ConfigError(f"true_mu must be in [0, 1], got {self.true_mu}")
        if not (self.cost_per_token > 0 and self.cost_scale > 0 and self.output_len_mean >= 0):
            raise ConfigError("cost_per_token and cost_scale must be positive, output_len_mean >= 0")

    @property
    def unit_cost(self) -> float:
        return self.cost_per_token * self.cost_scale

    def expected_cost(self) -> float:
        """Exact mean of the clipped cost distribution."""
        return _clipped_mean(self.unit_cost, self.input_len_range, self.output_len_mean)


def _token_pmf(input_len_range, output_mean):
    a, b = input_len_range
    if output_mean > 0:
        # 40 standard deviations out the remaining tail mass is far below 1e-300
        hi = int(output_mean + 40.0 * np.sqrt(output_mean) + 40)
        pois = stats.poisson.pmf(np.arange(hi), output_mean)
    else:
        pois = np.array([1.0])
    unif = np.full(b - a + 1, 1.0 / (b - a + 1))
    pmf = np.convolve(unif, pois)
    tokens = a + np.arange(pmf.shape[0])
    return tokens, pmf


def _clipped_mean(unit, input_len_range, output_mean) -> float:
    tokens, pmf = _token_pmf(input_len_range, output_mean)
    return float(np.sum(pmf * np.minimum(unit * tokens, 1.0)))


def solve_cost_scale(target: float, cost_per_token: float, input_len_range, output_mean: float) -> float:
    """Scale making the clipped expected cost equal ``target`` in (0, 1)."""
    if not 0.0 < target < 1.0:
        raise ConfigError(f"expected cost must lie in (0, 1), got {target}")
    tokens, pmf = _token_pmf(input_len_range, output_mean)
    lo_tok = max(int(tokens[0]), 1)

    def gap(unit):
        return float(np.sum(pmf * np.minimum(unit * tokens, 1.0))) - target

    unit = optimize.brentq(gap, 0.0, 1.0 / lo_tok, xtol=1e-16, rtol=4 * np.finfo(float).eps)
    return unit / cost_per_token


def sample_cost(arm: ArmSpec, rng=None) -> float:
    rng = check_rng(rng)
    a, b = arm.input_len_range
    l_in = rng.integers(a, b + 1)
    l_out = rng.poisson(arm.output_len_mean) if arm.output_len_mean > 0 else 0
    return float(min((l_in + l_out) * arm.unit_cost, 1.0))


def sample_reward(true_mu: float, kind=RewardDist.BERNOULLI, rng=None) -> float:
    rng = check_rng(rng)
    kind = RewardDist.parse(kind)
    if kind is RewardDist.BERNOULLI:
        return float(rng.random() < true_mu)
    return float(LEVELS[rng.choice(4, p=level_probs(true_mu))])


@dataclass
class RoundOutcome:
    """What one round revealed.

    ``used`` lists queried arms in query order; ``rewards`` and ``costs``
    align with it.  ``action_costs`` covers every member of ``action`` and
    is only read by learners configured to observe all costs.
    """

    action: ActionSet
    used: Tuple[int, ...]
    rewards: np.ndarray
    costs: np.ndarray
    total_used_cost: float
    total_worstcase_cost: float
    action_costs: np.ndarray = field(default=None, repr=False)


class Environment:
    """Immutable arm table plus a per-round sampler."""

    def __init__(self, inst: ProblemInstance, specs: Sequence[ArmSpec], reward_dist=RewardDist.BERNOULLI):
        if len(specs) != inst.K:
            raise ConfigError(f"instance has K={inst.K} but {len(specs)} arm specs")
        self.inst = inst
        self.specs = tuple(specs)
        self.reward_dist = RewardDist.parse(reward_dist)
        self.mu = np.array([s.true_mu for s in specs])
        self.unit = np.array([s.unit_cost for s in specs])
        self.in_lo = np.array([s.input_len_range[0] for s in specs])
        self.in_hi = np.array([s.input_len_range[1] for s in specs])
        self.out_mean = np.array([s.output_len_mean for s in specs])
        if self.reward_dist is RewardDist.LEVELS:
            self.level_cdf = np.cumsum([level_probs(m) for m in self.mu], axis=1)
        self._costs = None

    @property
    def expected_costs(self) -> np.ndarray:
        if self._costs is None:
            self._costs = np.array([s.expected_cost() for s in self.specs])
        return self._costs

    def draw(self, rng):
        """One reward and one cost for every arm."""
        K = self.inst.K
        u = rng.random(K)
        if self.reward_dist is RewardDist.BERNOULLI:
            rewards = (u < self.mu).astype(float)
        else:
            idx = (u[:, None] >= self.level_cdf[:, :-1]).sum(axis=1)
            rewards = LEVELS[idx]
        l_in = rng.integers(self.in_lo, self.in_hi + 1)
        l_out = rng.poisson(self.out_mean)
        costs = np.minimum((l_in + l_out) * self.unit, 1.0)
        return rewards, costs

    def is_success(self, reward: float) -> bool:
        if self.reward_dist is RewardDist.BERNOULLI:
            return reward >= 1.0
        return reward >= AWC_LEVEL_SUCCESS

    def execute(self, S, cascade_order=None, rng=None, check: bool = True) -> RoundOutcome:
        """Play ``S``; AWC queries in ``cascade_order`` until the first success."""
        rng = check_rng(rng)
        if check:
            S = check_action(S, self.inst)
        rewards, costs = self.draw(rng)
        if cascade_order is None:
            ordered = tuple(S)
        else:
            members = set(S)
            ordered = tuple(k for k in cascade_order if k in members)
            if len(ordered) != len(S):
                ordered = ordered + tuple(k for k in S if k not in set(ordered))
        if self.inst.model is RewardModel.AWC:
            used = []
            for k in ordered:
                used.append(k)
                if self.is_success(rewards[k]):
                    break
            used = tuple(used)
        else:
            used = ordered
        idx = list(used)
        used_costs = costs[idx]
        act = list(S)
        return RoundOutcome(
            action=tuple(S),
            used=used,
            rewards=rewards[idx],
            costs=used_costs,
            total_used_cost=float(used_costs.sum()),
            total_worstcase_cost=float(costs[act].sum()),
            action_costs=costs[act],
        )


def execute_action(inst, specs, S, cascade_order=None, rng=None, reward_dist=RewardDist.BERNOULLI) -> RoundOutcome:
    return Environment(inst, specs, reward_dist).execute(S, cascade_order, rng)


def make_synthetic_instance(K: int, N: int, rho: float, model, rng=None) -> Tuple[ProblemInstance, List[ArmSpec]]:
    """Uniform random means and expected costs, token model back-solved."""
    rng = check_rng(rng)
    inst = ProblemInstance(K=K, N=N, rho=rho, model=RewardModel.parse(model))
    mu = rng.random(K)
    cost = rng.random(K)
    specs = [synthetic_arm(float(m), float(c)) for m, c in zip(mu, cost)]
    return inst, specs


def synthetic_arm(mu: float, expected_cost: float, name: str = "") -> ArmSpec:
    # a uniform draw of exactly 0 would make the scale degenerate
    target = min(max(expected_cost, 1e-12), 1.0 - 1e-12)
    scale = solve_cost_scale(target, SYNTHETIC_PRICE, SYNTHETIC_INPUT_RANGE, SYNTHETIC_OUTPUT_MEAN)
    return ArmSpec(
        true_mu=mu,
        cost_per_token=SYNTHETIC_PRICE,
        input_len_range=SYNTHETIC_INPUT_RANGE,
        output_len_mean=SYNTHETIC_OUTPUT_MEAN,
        cost_scale=scale,
        name=name,
    )


# price per 1k tokens (USD); means are illustrative placeholders for the
# unobservable per-model accuracy and sit inside the discrete-level range
TABLE3_LLMS = [
    ("ChatGLM2-6B-32K", 0.005, 0.10),
    ("ChatGPT-3.5", 0.02, 0.34),
    ("Claude 2", 0.08, 0.38),
    ("ERNIE 3.5-8K", 0.015, 0.28),
    ("Llama 2-7B", 0.005, 0.14),
    ("Llama 2-13B", 0.008, 0.20),
    ("Llama 2-70B", 0.05, 0.30),
    ("Mixtral-8x7B-Instruct", 0.05, 0.33),
    ("ChatGPT-4", 0.12, 0.45),
]
TABLE3_INPUT_RANGE = (50, 150)
TABLE3_OUTPUT_MEAN = 150.0
TABLE3_COST_SCALE = 20.0
TABLE3_RHO = {RewardModel.AWC: 0.45, RewardModel.SUC: 0.5, RewardModel.AIC: 0.3}


def table3_arms() -> List[ArmSpec]:
    return [
        ArmSpec(
            true_mu=mu,
            cost_per_token=price / 1000.0,
            input_len_range=TABLE3_INPUT_RANGE,
            output_len_mean=TABLE3_OUTPUT_MEAN,
            cost_scale=TABLE3_COST_SCALE,
            name=name,
        )
        for name, price, mu in TABLE3_LLMS
    ]


MAX_PRESET_DRAWS = 1000


@dataclass(frozen=True)
class Preset:
    name: str
    K: int
    N: int
    rho: float
    model: RewardModel
    reward_dist: RewardDist
    description: str

    def build(self, seed: int = 0, model=None, rho=None):
        model = RewardModel.parse(model) if model is not None else self.model
        if self.name == "table3-llms":
            rho = rho if rho is not None else TABLE3_RHO[model]
            return ProblemInstance(self.K, self.N, rho, model), table3_arms()
        rho = self.rho if rho is None else rho
        rng = np.random.default_rng(seed)
        # redraw until some feasible set fits the budget at the true costs;
        # otherwise no policy can satisfy the constraint and the budgeted
        # benchmark is undefined
        for _ in range(MAX_PRESET_DRAWS):
            inst, specs = make_synthetic_instance(self.K, self.N, rho, model, rng)
            smallest = self.N if model.exact_cardinality else 1
            cheapest = np.sort([s.expected_cost() for s in specs])[:smallest].sum()
            if cheapest <= rho:
                return inst, specs
        raise ConfigError(f"{self.name}: no budget-feasible instance in {MAX_PRESET_DRAWS} draws at rho={rho}")


PRESETS = {
    p.name: p
    for p in [
        Preset("synthetic-awc-d3", 16, 8, 2.5, RewardModel.AWC, RewardDist.BERNOULLI,
               "uniform means and costs, K=16, N=8, rho=2.5, AWC"),
        Preset("synthetic-suc-d3", 25, 8, 1.4, RewardModel.SUC, RewardDist.BERNOULLI,
               "uniform means and costs, K=25, N=8, rho=1.4, SUC"),
        Preset("synthetic-aic-d3", 25, 8, 1.6, RewardModel.AIC, RewardDist.BERNOULLI,
               "uniform means and costs, K=25, N=8, rho=1.6, AIC"),
        Preset("table3-llms", 9, 4, 0.45, RewardModel.AWC, RewardDist.LEVELS,
               "nine priced LLMs, N=4, discrete reward levels; rho 0.45/0.5/0.3 by model"),
    ]
}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}") from None
