"""Selection policies as estimators.

Every policy follows the same life cycle::

    pol = C2MABV(alpha_mu=0.3, alpha_c=0.01).fit(instance, horizon=T, rng=seed)
    z = pol.decision_function()          # local server: fractional vector
    S = pol.predict(rng=cloud_rng)       # or round z yourself (cloud side)
    pol.partial_fit([outcome, ...])      # feedback, one or many rounds

Relaxation policies return a genuinely fractional ``z``; the others return
the indicator of the set they want, which every rounder passes through
unchanged.  The module-level ``*_select`` functions are the stateless
forms of the same rules.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import ConfigError, check_action, check_is_fitted, check_positive, check_rng
from .core import ActionSet, ProblemInstance, RewardModel, indicator
from .env import RoundOutcome
from .learner import EstimatorState
from .oracle import direct_policy_select
from .relax import DEFAULT_CG_STEPS, RelaxedProblem, SolveReport, solve
from .rounding import round_selection

CASCADE_ORDERS = ("lcb", "index", "random")


def relax_select(mu, c, inst: ProblemInstance, cg_steps: int = DEFAULT_CG_STEPS) -> SolveReport:
    p = RelaxedProblem(np.asarray(mu, dtype=float), np.asarray(c, dtype=float), inst.N, inst.rho, inst.model)
    return solve(p, cg_steps)


def _top_n(scores, N: int) -> ActionSet:
    order = np.argsort(-np.asarray(scores, dtype=float), kind="stable")
    return tuple(sorted(int(k) for k in order[:N]))


def cucb_select(state: EstimatorState, inst: ProblemInstance) -> ActionSet:
    """Top-N arms by reward UCB; the budget is ignored."""
    return _top_n(state.reward_ucbs(), inst.N)


def epsilon(t: int, K: int) -> float:
    return min(1.0, 2.0 * math.sqrt(K) / math.sqrt(t))


def epsilon_greedy_select(state: EstimatorState, inst: ProblemInstance, t: int, rng=None,
                          cg_steps: int = DEFAULT_CG_STEPS) -> ActionSet:
    rng = check_rng(rng)
    if rng.random() < epsilon(t, inst.K):
        return tuple(sorted(int(k) for k in rng.choice(inst.K, size=inst.N, replace=False)))
    rep = relax_select(state.mu_hat, state.c_hat, inst, cg_steps)
    return round_selection(rep.z, inst.model, inst.N, rng)


def thompson_sample(successes, failures, rng=None) -> np.ndarray:
    rng = check_rng(rng)
    return rng.beta(1.0 + np.asarray(successes, dtype=float), 1.0 + np.asarray(failures, dtype=float))


def thompson_select(state_ts, inst: ProblemInstance, rng=None, cg_steps: int = DEFAULT_CG_STEPS) -> ActionSet:
    """``state_ts`` is ``(successes, failures, c_hat)``."""
    rng = check_rng(rng)
    s, f, c_hat = state_ts
    theta = thompson_sample(s, f, rng)
    rep = relax_select(theta, c_hat, inst, cg_steps)
    return round_selection(rep.z, inst.model, inst.N, rng)


def fixed_select(arm_set: Sequence[int], inst: ProblemInstance | None = None) -> ActionSet:
    if inst is None:
        return tuple(sorted(int(k) for k in arm_set))
    try:
        return check_action(arm_set, inst)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


class BasePolicy(BaseEstimator):
    """Shared state handling: estimator, tie-breaking and cascade order."""

    name = "policy"

    def __init__(self, alpha_mu=0.3, alpha_c=0.01, delta=None, cascade_order="lcb",
                 observe_all_costs=False):
        self.alpha_mu = alpha_mu
        self.alpha_c = alpha_c
        self.delta = delta
        self.cascade_order = cascade_order
        self.observe_all_costs = observe_all_costs

    def _validate_params(self):
        check_positive(self.alpha_mu, "alpha_mu")
        check_positive(self.alpha_c, "alpha_c")
        if self.delta is not None and not 0 < self.delta <= 1:
            raise ConfigError(f"delta must lie in (0, 1], got {self.delta}")
        if self.cascade_order not in CASCADE_ORDERS:
            raise ConfigError(f"cascade_order must be one of {CASCADE_ORDERS}, got {self.cascade_order!r}")

    def fit(self, instance: ProblemInstance, horizon: int | None = None, rng=None):
        """Reset to the round-1 state for ``instance``.

        ``horizon`` sets the default ``delta = 1/horizon``.
        """
        self._validate_params()
        if not isinstance(instance, ProblemInstance):
            raise TypeError("fit expects a ProblemInstance")
        delta = self.delta
        if delta is None:
            delta = 1.0 / horizon if horizon else 1.0
        self.instance_ = instance
        self.delta_ = float(delta)
        self.rng_ = check_rng(rng)
        self.state_ = EstimatorState.initial(instance.K, self.alpha_mu, self.alpha_c, self.delta_)
        self.last_report_ = None
        self._reset()
        return self

    def _reset(self):
        pass

    def partial_fit(self, outcomes: Sequence[RoundOutcome]):
        check_is_fitted(self)
        if isinstance(outcomes, RoundOutcome):
            outcomes = [outcomes]
        for o in outcomes:
            self.state_.absorb(o, self.observe_all_costs)
            self._absorb(o)
        return self

    def _absorb(self, outcome: RoundOutcome):
        pass

    @property
    def t_(self) -> int:
        return self.state_.t

    def _needs_tiebreak(self) -> bool:
        st = self.state_
        return bool(np.any(st.n_mu == 0) or np.any(st.n_c == 0))

    def _permuted(self, fn, *vecs):
        """Run ``fn`` on randomly permuted arms while some are unobserved.

        Solvers break ties by index, so permuting turns that into a uniform
        random tie-break among the (identical-looking) unobserved arms.
        """
        if not self._needs_tiebreak():
            return fn(*vecs)
        perm = self.rng_.permutation(self.instance_.K)
        z_p = fn(*(np.asarray(v)[perm] for v in vecs))
        z = np.empty_like(z_p)
        z[perm] = z_p
        return z

    def decision_function(self) -> np.ndarray:
        """Fractional selection for the current round."""
        check_is_fitted(self)
        return self._decide()

    def _decide(self) -> np.ndarray:
        raise NotImplementedError

    def predict(self, rng=None) -> ActionSet:
        z = self.decision_function()
        inst = self.instance_
        return round_selection(z, inst.model, inst.N, check_rng(rng) if rng is not None else self.rng_)

    def query_order(self) -> tuple:
        """AWC cascade order for the current round."""
        check_is_fitted(self)
        K = self.instance_.K
        if self.cascade_order == "index":
            return tuple(range(K))
        if self.cascade_order == "random":
            return tuple(int(k) for k in self.rng_.permutation(K))
        return tuple(int(k) for k in np.argsort(self.state_.cost_lcbs(), kind="stable"))

    def _indicator(self, S) -> np.ndarray:
        return indicator(S, self.instance_.K)


class C2MABV(BasePolicy):
    """Optimistic rewards, pessimistic costs, relaxed solve, cloud rounding."""

    name = "c2mabv"

    def __init__(self, alpha_mu=0.3, alpha_c=0.01, delta=None, cg_steps=DEFAULT_CG_STEPS,
                 cascade_order="lcb", observe_all_costs=False, warmup=False):
        super().__init__(alpha_mu, alpha_c, delta, cascade_order, observe_all_costs)
        self.cg_steps = cg_steps
        self.warmup = warmup

    def _validate_params(self):
        super()._validate_params()
        check_positive(self.cg_steps, "cg_steps", integer=True)

    def _warmup_set(self):
        inst = self.instance_
        t = self.state_.t
        if not self.warmup or t > math.ceil(inst.K / inst.N):
            return None
        chunk = list(range((t - 1) * inst.N, min(t * inst.N, inst.K)))
        if inst.model.exact_cardinality:
            chunk += [k for k in range(inst.K) if k not in chunk][: inst.N - len(chunk)]
        return chunk

    def _solve(self, mu, c):
        rep = relax_select(mu, c, self.instance_, self.cg_steps)
        self.last_report_ = rep
        return rep.z

    def _decide(self):
        S = self._warmup_set()
        if S is not None:
            self.last_report_ = None
            return self._indicator(S)
        st = self.state_
        return self._permuted(self._solve, st.reward_ucbs(), st.cost_lcbs())


class C2MABVDirect(C2MABV):
    """Same estimates, but the per-round problem is enumerated exactly."""

    name = "c2mabv-direct"

    def _decide(self):
        S = self._warmup_set()
        if S is not None:
            return self._indicator(S)
        st = self.state_
        inst = self.instance_

        def pick(mu, c):
            view = _Estimates(mu, c)
            return self._indicator(direct_policy_select(view, inst))

        return self._permuted(pick, st.reward_ucbs(), st.cost_lcbs())


class _Estimates:
    def __init__(self, mu, c):
        self._mu, self._c = mu, c

    def reward_ucbs(self):
        return self._mu

    def cost_lcbs(self):
        return self._c


class CUCB(BasePolicy):
    """Reward-only UCB: the N most optimistic arms, budget ignored."""

    name = "cucb"

    def _decide(self):
        N = self.instance_.N
        return self._permuted(lambda mu: self._indicator(_top_n(mu, N)), self.state_.reward_ucbs())


class EpsilonGreedy(BasePolicy):
    """Uniform exploration with ``eps_t = min(1, 2 sqrt(K) / sqrt(t))``.

    Exploitation runs the relaxation at the empirical means.
    """

    name = "eps-greedy"

    def __init__(self, cg_steps=DEFAULT_CG_STEPS, cascade_order="lcb", observe_all_costs=False):
        super().__init__(cascade_order=cascade_order, observe_all_costs=observe_all_costs)
        self.cg_steps = cg_steps

    def _reset(self):
        self.explored_ = 0

    def _decide(self):
        inst = self.instance_
        if self.rng_.random() < epsilon(self.state_.t, inst.K):
            self.explored_ += 1
            S = self.rng_.choice(inst.K, size=inst.N, replace=False)
            return self._indicator(S)
        st = self.state_
        return self._permuted(
            lambda mu, c: relax_select(mu, c, inst, self.cg_steps).z, st.mu_hat, st.c_hat
        )


class ThompsonSampling(BasePolicy):
    """Beta posteriors over rewards with fractional tallies; empirical costs."""

    name = "thompson"

    def __init__(self, cg_steps=DEFAULT_CG_STEPS, cascade_order="lcb", observe_all_costs=False):
        super().__init__(cascade_order=cascade_order, observe_all_costs=observe_all_costs)
        self.cg_steps = cg_steps

    def _reset(self):
        K = self.instance_.K
        self.successes_ = np.zeros(K)
        self.failures_ = np.zeros(K)

    def _absorb(self, outcome):
        for k, x in zip(outcome.used, outcome.rewards):
            self.successes_[k] += x
            self.failures_[k] += 1.0 - x

    def _decide(self):
        theta = thompson_sample(self.successes_, self.failures_, self.rng_)
        inst = self.instance_
        return self._permuted(lambda mu, c: relax_select(mu, c, inst, self.cg_steps).z, theta, self.state_.c_hat)


class FixedPolicy(BasePolicy):
    """Always the same arms."""

    name = "fixed"

    def __init__(self, arms=(), cascade_order="lcb"):
        super().__init__(cascade_order=cascade_order)
        self.arms = arms

    def fit(self, instance, horizon=None, rng=None):
        super().fit(instance, horizon, rng)
        self.action_ = fixed_select(self.arms, instance)
        return self

    def _decide(self):
        return self._indicator(self.action_)


POLICY_KEYS = ("c2mabv", "c2mabv-direct", "cucb", "eps-greedy", "thompson", "fixed:<ids>")


def make_policy(key: str, alpha_mu=0.3, alpha_c=0.01, delta=None, cg_steps=DEFAULT_CG_STEPS,
                cascade_order="lcb", observe_all_costs=False, warmup=False) -> BasePolicy:
    """Build a policy from its config key."""
    key = key.strip()
    common = dict(cascade_order=cascade_order, observe_all_costs=observe_all_costs)
    if key == "c2mabv":
        return C2MABV(alpha_mu, alpha_c, delta, cg_steps, warmup=warmup, **common)
    if key == "c2mabv-direct":
        return C2MABVDirect(alpha_mu, alpha_c, delta, cg_steps, warmup=warmup, **common)
    if key == "cucb":
        return CUCB(alpha_mu, alpha_c, delta, **common)
    if key == "eps-greedy":
        return EpsilonGreedy(cg_steps, **common)
    if key == "thompson":
        return ThompsonSampling(cg_steps, **common)
    if key.startswith("fixed:"):
        try:
            arms = tuple(int(x) for x in key[6:].replace("+", ",").split(",") if x.strip())
        except ValueError:
            raise ConfigError(f"bad arm list in policy {key!r}") from None
        if not arms:
            raise ConfigError("fixed policy needs at least one arm id")
        return FixedPolicy(arms, cascade_order=cascade_order)
    raise ConfigError(f"unknown policy {key!r}; expected one of {', '.join(POLICY_KEYS)}")
