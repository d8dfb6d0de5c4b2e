import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from _oracles import lp_vertex_oracle
from llmbandit.oracle import best_budgeted_action
from llmbandit.relax import (
    RelaxedProblem,
    greedy_trace,
    solve,
    solve_aic,
    solve_awc,
    solve_suc,
    solve_two_row_lp,
)


def P(mu, c, N, rho, model):
    return RelaxedProblem(np.array(mu, float), np.array(c, float), N, rho, model)


def test_slack_budget_picks_top_n():
    rep = solve_two_row_lp([0.3, 0.9, 0.1, 0.7], [0.5, 0.5, 0.5, 0.5], 2, 10.0, True)
    assert rep.z.tolist() == [0, 1, 0, 1]
    assert rep.status == "optimal"


def test_worked_example():
    rep = solve_two_row_lp([0.9, 0.8, 0.5], [0.6, 0.5, 0.1], 2, 0.7, True)
    assert np.allclose(rep.z, [1, 0, 1])
    assert rep.objective == pytest.approx(1.4)
    best = lp_vertex_oracle([0.9, 0.8, 0.5], [0.6, 0.5, 0.1], 2, 0.7, True)
    assert best[0] == pytest.approx(1.4)


def test_n_equals_k():
    rep = solve_two_row_lp([0.1, 0.2, 0.3], [0.1, 0.1, 0.1], 3, 0.5, True)
    assert rep.z.tolist() == [1, 1, 1]
    rep = solve_two_row_lp([0.1, 0.2, 0.3], [0.3, 0.1, 0.2], 3, 0.5, True)
    assert rep.status == "infeasible_fallback"
    assert rep.z.tolist() == [1, 1, 1]


def test_fallback_picks_cheapest():
    rep = solve_two_row_lp([0.9, 0.1, 0.5, 0.2], [0.8, 0.3, 0.2, 0.9], 2, 0.1, True)
    assert rep.status == "infeasible_fallback"
    assert rep.z.tolist() == [0, 1, 1, 0]


def test_kernel_input_validation():
    with pytest.raises(ValueError):
        solve_two_row_lp([0.1, 0.2], [0.1, -0.1], 1, 1.0, True)
    with pytest.raises(ValueError):
        solve_two_row_lp([0.1, 0.2], [0.1, 0.1], 3, 1.0, True)


def test_suc_examples():
    rep = solve_suc(P([0.4] * 5, [0.2, 0.1, 0.3, 0.1, 0.2], 3, 0.6, "suc"))
    assert rep.objective == pytest.approx(1.2)
    assert rep.z.sum() == pytest.approx(3)
    assert np.allclose(solve_suc(P([0.9, 0.8, 0.5], [0.6, 0.5, 0.1], 2, 0.7, "suc")).z, [1, 0, 1])
    bad = solve_suc(P([0.9, 0.8, 0.5], [0.6, 0.5, 0.4], 2, 0.7, "suc"))
    assert bad.status == "infeasible_fallback" and bad.z.tolist() == [0, 1, 1]


def test_aic_examples():
    rep = solve_aic(P([1.0, 1.0, 1.0], [0.3, 0.1, 0.2], 2, 0.35, "aic"))
    assert rep.objective == pytest.approx(1.0)
    rep = solve_aic(P([0.9, 0.5, 0.4], [0.2, 0.2, 0.2], 2, 1.0, "aic"))
    assert rep.z.tolist() == [1, 1, 0]
    assert rep.objective == pytest.approx(0.45)
    # a zero mean is clamped, never chosen when alternatives exist
    rep = solve_aic(P([0.0, 0.2, 0.3, 0.1], [0.0, 0.3, 0.3, 0.3], 2, 1.0, "aic"))
    assert rep.z[0] == 0.0


def test_awc_examples():
    rep = solve_awc(P([0.8], [0.1], 1, 1.0, "awc"), steps=100)
    assert rep.z[0] == pytest.approx(1.0) and rep.objective == pytest.approx(0.8)
    rep = solve_awc(P([0, 0, 0], [0.1, 0.2, 0.3], 2, 0.25, "awc"), steps=100)
    assert rep.objective == 0.0
    assert rep.z.sum() <= 2 + 1e-9 and rep.z @ np.array([0.1, 0.2, 0.3]) <= 0.25 + 1e-9


def test_awc_beats_approximation_ratio_small():
    rng = np.random.default_rng(0)
    for _ in range(30):
        mu, c = rng.random(6), rng.random(6)
        rho = rng.uniform(0.2, 2.0)
        rep = solve_awc(P(mu, c, 3, rho, "awc"))
        _, opt = best_budgeted_action("awc", mu, c, 3, rho)
        assert rep.objective >= (1 - 1 / math.e) * opt - 1e-6


def test_dispatch_and_validation():
    assert solve(P([0.2, 0.9], [0.1, 0.1], 1, 1.0, "suc")).z.tolist() == [0, 1]
    with pytest.raises(ValueError):
        solve_suc(P([0.2, 0.9], [0.1, 0.1], 1, 1.0, "aic"))
    with pytest.raises(ValueError):
        RelaxedProblem(np.zeros(2), np.zeros(3), 1, 1.0, "suc")
    with pytest.raises(ValueError):
        solve_awc(P([0.2, 0.9], [0.1, 0.1], 1, 1.0, "awc"), steps=0)


lp_case = st.integers(1, 7).flatmap(
    lambda K: st.tuples(
        st.lists(st.floats(-1, 1), min_size=K, max_size=K),
        st.lists(st.floats(0, 1), min_size=K, max_size=K),
        st.integers(1, K),
        st.floats(0.01, 4),
        st.booleans(),
    )
)


@given(lp_case)
def test_kernel_matches_vertex_oracle(case):
    w, c, N, rho, eq = case
    rep = solve_two_row_lp(w, c, N, rho, eq)
    ref = lp_vertex_oracle(w, c, N, rho, eq)
    if ref is None:
        assert rep.status == "infeasible_fallback"
        return
    assert rep.status == "optimal"
    assert rep.objective == pytest.approx(ref[0], abs=1e-8)
    assert rep.fractional_count <= 2
    z = rep.z
    assert np.all((z >= -1e-12) & (z <= 1 + 1e-12))
    assert np.dot(c, z) <= rho + 1e-9
    if eq:
        assert abs(z.sum() - N) <= 1e-9
    else:
        assert z.sum() <= N + 1e-9


@given(st.integers(2, 8).flatmap(lambda K: st.tuples(
    st.lists(st.floats(0, 1), min_size=K, max_size=K),
    st.lists(st.floats(0, 1), min_size=K, max_size=K),
    st.integers(1, K), st.floats(0.05, 3))))
def test_greedy_monotone_and_feasible(case):
    mu, c, N, rho = case
    p = P(mu, c, N, rho, "awc")
    z, trace, _ = greedy_trace(p, 50)
    assert np.all(np.diff(trace) >= -1e-12)
    assert z.sum() <= N + 1e-9
    assert np.dot(c, z) <= rho + 1e-9
    assert np.all((z >= 0) & (z <= 1))


def test_kernel_tie_break_is_by_index():
    rep = solve_two_row_lp([0.5, 0.5, 0.5], [0.1, 0.1, 0.1], 1, 1.0, True)
    assert rep.z.tolist() == [1, 0, 0]
