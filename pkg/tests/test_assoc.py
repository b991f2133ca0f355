import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from uav_backhaul.assoc import (
    best_backhaul,
    build_p1_milp,
    dump_milp,
    linprog_max,
    load_milp,
    solve_association,
    solve_lp,
    solve_milp,
)
from uav_backhaul.errors import StructureError, UnboundedError
from uav_backhaul.geometry import ScenarioConfig, generate_scenario
from uav_backhaul.model import RateTable
from uav_backhaul.oracles import enumerate_associations, tableau_simplex
from uav_backhaul.rates import end_to_end, rate_table, uniform_power
from uav_backhaul.verify import random_rate_table


def test_lp_box():
    res = linprog_max([1, 1], [[1, 0], [0, 1]], [1, 1])
    assert res.status == "optimal"
    assert res.objective == pytest.approx(2.0)


def test_lp_unbounded():
    with pytest.raises(UnboundedError):
        linprog_max([1, 0], [[0, 1]], [1])


def test_lp_infeasible_certificate():
    A = np.array([[1.0, 1.0], [-1.0, 0.0]])
    b = np.array([1.0, -2.0])  # x + y <= 1 and x >= 2
    res = linprog_max([1, 1], A, b)
    assert res.status == "infeasible"
    y = res.certificate
    assert np.all(y >= -1e-12)
    assert np.all(y @ A >= -1e-9)
    assert y @ b < 0


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31))
def test_lp_matches_highs(seed):
    rng = np.random.default_rng(seed)
    n, m1, m2 = rng.integers(1, 7), rng.integers(1, 7), rng.integers(0, 3)
    A_ub = rng.normal(size=(m1, n))
    A_ub = np.vstack([A_ub, np.ones((1, n))])  # keeps it bounded
    b_ub = np.concatenate([rng.normal(size=m1) + 1.0, [5.0]])
    A_eq = rng.normal(size=(m2, n))
    b_eq = A_eq @ rng.uniform(0, 0.5, size=n)
    c = rng.normal(size=n)
    ref = linprog(-c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq if m2 else None, b_eq=b_eq if m2 else None, method="highs")
    res = linprog_max(c, A_ub, b_ub, A_eq, b_eq)
    if ref.status == 2:
        assert res.status == "infeasible"
    else:
        assert res.status == "optimal"
        assert res.objective == pytest.approx(-ref.fun, rel=1e-7, abs=1e-9)


def test_tiny_instance_counts():
    rates = RateTable(np.array([[[1.0]]]), np.array([[1.0]]))
    inst = build_p1_milp(rates)
    assert inst.num_vars == 3
    assert inst.num_rows == 5
    assert inst.integer.sum() == 2


def test_paper_scale_counts():
    rates = RateTable(np.ones((4, 20, 30)), np.ones((2, 4)))
    inst = build_p1_milp(rates)
    assert inst.layout["eps"][1] == (4, 20, 30)
    assert inst.layout["theta"][1] == (2, 4)
    assert inst.num_vars == 2400 + 8 + 4


def test_dimension_mismatch():
    with pytest.raises(StructureError):
        build_p1_milp(RateTable(np.ones((2, 2, 2)), np.ones((2, 3))))
    with pytest.raises(StructureError):
        build_p1_milp(RateTable(np.ones((2, 2, 2)), np.ones((1, 2))), theta=np.ones((2, 2)))


def test_aggregation_requires_flat_rates():
    rates = RateTable(np.arange(8.0).reshape(2, 2, 2) + 1, np.ones((1, 2)))
    with pytest.raises(StructureError):
        build_p1_milp(rates, aggregate_rbs=True)


@pytest.mark.parametrize("seed", range(50))
def test_milp_equals_enumeration(seed):
    rates = random_rate_table(np.random.default_rng(seed))
    best, _ = enumerate_associations(rates)
    inst = build_p1_milp(rates)
    res = solve_milp(inst, gap_tol=0.0)
    assert res.optimal
    assert res.objective * inst.scale == pytest.approx(best, rel=1e-9)
    # LP relaxation bounds the integer optimum
    assert solve_lp(inst).objective * inst.scale >= best * (1 - 1e-12)
    fixed = solve_association(rates, aggregate_rbs=False, gap_tol=0.0)
    fixed.assoc.validate()
    assert end_to_end(fixed.assoc, rates).total == pytest.approx(best, rel=1e-9)


@pytest.mark.parametrize("seed", range(10))
def test_relaxation_matches_tableau(seed):
    rates = random_rate_table(np.random.default_rng(100 + seed), max_l=2, max_u=3, max_n=3, max_m=2)
    inst = build_p1_milp(rates)
    n = inst.num_vars
    bounded = np.flatnonzero(np.isfinite(inst.upper))
    A = np.vstack([inst.A_ub, np.eye(n)[bounded]])
    b = np.concatenate([inst.b_ub, inst.upper[bounded]])
    ref, _ = tableau_simplex(inst.c, A, b, inst.A_eq, inst.b_eq)
    assert solve_lp(inst).objective == pytest.approx(ref, rel=1e-7)


def test_equal_rates_any_maximal_matching():
    rates = RateTable(np.ones((2, 3, 2)), np.full((1, 2), 10.0))
    res = solve_association(rates)
    res.assoc.validate()
    assert res.assoc.eps.sum() == 2
    assert res.rates.sum() == pytest.approx(2.0)


def test_zero_backhaul_uav_unused():
    access = np.array([[[5.0]], [[3.0]]])
    rates = RateTable(access, np.array([[0.0, 10.0]]))
    res = solve_association(rates, gap_tol=0.0)
    assert res.rates.sum() == pytest.approx(3.0)
    assert res.assoc.eps[1, 0, 0] == 1


def test_single_user_closed_form():
    rng = np.random.default_rng(4)
    for _ in range(20):
        access = rng.uniform(1, 10, size=(3, 1, 1))
        backhaul = rng.uniform(1, 10, size=(2, 3))
        rates = RateTable(access, backhaul)
        expect = np.max(np.minimum(access[:, 0, 0], backhaul.max(axis=0)))
        res = solve_association(rates, fix_backhaul=False, gap_tol=0.0)
        assert res.rates.sum() == pytest.approx(expect, rel=1e-12)


def test_best_backhaul_rules():
    rates = RateTable(np.ones((3, 1, 1)), np.array([[1.0, 2.0, 3.0]]))
    assert best_backhaul(rates).tolist() == [[1, 1, 1]]
    tie = RateTable(np.ones((1, 1, 1)), np.array([[4.0], [4.0]]))
    assert best_backhaul(tie).tolist() == [[1], [0]]


def test_best_backhaul_nearer_tb_with_unit_fading():
    cfg = ScenarioConfig(rician_k=float("inf"))
    sc = generate_scenario(cfg, 0)
    theta = best_backhaul(rate_table(sc, uniform_power(sc)))
    # UAVs on the west half pick TB 0, east half TB 1
    west = sc.uavs[:, 0] < 500
    assert np.all(theta[0, west] == 1) and np.all(theta[1, ~west] == 1)


@pytest.mark.parametrize("seed", range(8))
def test_aggregated_equals_full_at_small_scale(seed):
    sc = generate_scenario(ScenarioConfig(num_users=4, num_uavs=2, num_rbs=3), seed)
    rates = rate_table(sc, uniform_power(sc))
    agg = solve_association(rates, aggregate_rbs=True, gap_tol=0.0)
    full = solve_association(rates, aggregate_rbs=False, gap_tol=0.0)
    assert agg.rates.sum() == pytest.approx(full.rates.sum(), rel=1e-9)
    agg.assoc.validate()


def test_paper_scale_solution_is_feasible():
    sc = generate_scenario(ScenarioConfig(), 11)
    rates = rate_table(sc, uniform_power(sc))
    res = solve_association(rates, scale=sc.radio.rb_bandwidth)
    assert res.optimal
    res.assoc.validate()
    assert res.assoc.eps.sum() <= sc.num_rbs
    assert end_to_end(res.assoc, rates).total == pytest.approx(res.rates.sum())


def test_node_budget_exhaustion_flags_suboptimal():
    rates = random_rate_table(np.random.default_rng(3), max_l=2, max_u=3, max_n=3)
    inst = build_p1_milp(rates)
    res = solve_milp(inst, gap_tol=0.0, node_budget=1)
    full = solve_milp(inst, gap_tol=0.0)
    if full.nodes > 1:
        assert not res.optimal


def test_dump_roundtrip(tmp_path):
    rates = random_rate_table(np.random.default_rng(9))
    inst = build_p1_milp(rates)
    path = tmp_path / "p1.txt"
    dump_milp(inst, path)
    back = load_milp(path)
    np.testing.assert_array_equal(back.c, inst.c)
    np.testing.assert_array_equal(back.A_ub, inst.A_ub)
    np.testing.assert_array_equal(back.b_eq, inst.b_eq)
    np.testing.assert_array_equal(back.integer, inst.integer)
    assert solve_milp(back).objective == solve_milp(inst).objective
    assert path.read_text().startswith("milp ")


def _capped_value(x, a, cap):
    return np.minimum((x * a).sum(axis=1), cap).sum()


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 4), st.integers(1, 12), st.integers(1, 12))
def test_greedy_and_polish_feasible_and_monotone(seed, L, U, N):
    from uav_backhaul.assoc.p1 import greedy_links, polish_links

    rng = np.random.default_rng(seed)
    a = rng.uniform(0.1, 3.0, size=(L, U))
    cap = rng.uniform(0.5, 6.0, size=L)
    g = greedy_links(a, cap, N)
    p = polish_links(g, a, cap, N)
    for x in (g, p):
        assert x.sum(axis=0).max() <= 1
        assert x.sum() <= N
    assert _capped_value(p, a, cap) >= _capped_value(g, a, cap) - 1e-12


@pytest.mark.parametrize("seed", range(10))
def test_polish_is_optimal_often_on_tiny(seed):
    # tiny instances: the warm-started solve still matches enumeration exactly
    rates = random_rate_table(np.random.default_rng(500 + seed))
    flat = RateTable(np.repeat(rates.access[:, :, :1], rates.access.shape[2], axis=2), rates.backhaul)
    best, _ = enumerate_associations(flat)
    res = solve_association(flat, aggregate_rbs=True, gap_tol=0.0)
    assert res.optimal
    assert res.rates.sum() == pytest.approx(best, rel=1e-9)


def test_incumbent_short_circuits_root():
    rates = RateTable(np.ones((1, 2, 1)), np.array([[1.0]]))
    inst = build_p1_milp(rates, theta=np.array([[1]]), aggregate_rbs=True)
    start = np.zeros(inst.num_vars)
    start[inst.layout["eps"][0]] = [1, 0]
    start[inst.layout["R"][0]] = 1.0
    res = solve_milp(inst, incumbent=start)
    assert res.optimal and res.nodes == 1
    assert res.objective == pytest.approx(1.0)
