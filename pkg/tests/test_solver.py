from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from powerflow.errors import InfeasibleError
from powerflow.model import DeadlineSpec, RailSet, TransitionModel, WorkloadProfile
from powerflow.solver import (
    build_schedule,
    dp_fixed_lambda,
    marginal_utility_jump_search,
    solve_lambda_search,
    time_dominant_lambda,
    weighted_optimum,
)
from powerflow.statespace import build_graph
from powerflow.workload import generate_random_instance, suite_instance

from helpers import brute_constrained, brute_weighted, dvfs, layer, num_paths, path_cost


def _three_layer_graph(switch_energy=5_000_000):
    w = WorkloadProfile(
        "three",
        (dvfs(0, leak=50_000),),
        tuple(layer(i, [c], [e]) for i, (c, e) in enumerate([(10_000, 400_000), (200, 900_000), (8_000, 300_000)], 1)),
    )
    return build_graph(w, RailSet((900, 1300)), TransitionModel(base_switch_energy=switch_energy))


def test_lambda_zero_without_transitions_is_layerwise_argmin():
    doc = generate_random_instance(3, num_layers=5, num_domains=2, menu_levels=3, base_switch_energy=0)
    tm = TransitionModel(dvfs_switch_latency=0, base_switch_energy=0)
    g = build_graph(doc.workload, RailSet(doc.menu.levels), tm)
    dl = doc.deadline_from_t_max(10**15)
    dl = DeadlineSpec(dl.target_rate)  # no idle power, so T carries no weight
    sched = dp_fixed_lambda(g, Fraction(0), dl)
    assert sched.e_op == sum(int(e.min()) for e in g.e_op)


def test_large_lambda_gives_fastest_schedule():
    g = _three_layer_graph()
    dl = DeadlineSpec(Fraction(1))
    fastest = min(path_cost(g, p)[0] for p in [(a, b, c) for a in (0, 1) for b in (0, 1) for c in (0, 1)])
    assert dp_fixed_lambda(g, time_dominant_lambda(g, dl), dl).t_infer == fastest


@pytest.mark.parametrize("lam", [0, 1, 10])
def test_dp_matches_exhaustive_on_eight_paths(lam):
    g = _three_layer_graph()
    assert g.sizes == [2, 2, 2]
    dl = DeadlineSpec(Fraction(1000), idle_power=30_000)
    assert weighted_optimum(g, Fraction(lam), dl).value == brute_weighted(g, Fraction(lam), dl)


def test_dp_value_matches_its_own_path():
    g = _three_layer_graph()
    dl = DeadlineSpec(Fraction(1000), idle_power=30_000)
    opt = weighted_optimum(g, Fraction(3), dl)
    t, e = path_cost(g, opt.indices)
    assert (opt.t, opt.e) == (t, e)


@settings(max_examples=40, deadline=None)
@given(
    seed=st.integers(0, 100_000),
    lam=st.sampled_from([Fraction(0), Fraction(1, 3), Fraction(1), Fraction(7), Fraction(1000), Fraction(10**6)]),
    duty=st.sampled_from(["always_active", "power_down"]),
)
def test_dp_exact_on_random_small_graphs(seed, lam, duty):
    doc = generate_random_instance(
        seed, num_layers=3, num_domains=2, menu_levels=3, num_banks=1, window_density=0.5, duty_model=duty
    )
    g = build_graph(doc.workload, RailSet(doc.menu.levels), doc.transition_model)
    dl = doc.deadline(Fraction(1000))
    assert weighted_optimum(g, lam, dl).value == brute_weighted(g, lam, dl)


def test_negative_lambda_rejected():
    g = _three_layer_graph()
    with pytest.raises(ValueError):
        weighted_optimum(g, Fraction(-1), DeadlineSpec(Fraction(1)))


def test_search_loose_deadline_single_dp_call():
    g = _three_layer_graph()
    dl = DeadlineSpec(Fraction(1))
    sched, report = solve_lambda_search(g, dl)
    assert report.dp_calls == 1
    assert report.lambda_star == 0
    assert sched == dp_fixed_lambda(g, Fraction(0), dl)


def test_search_infeasible_raises_with_min_latency():
    g = _three_layer_graph()
    dl = DeadlineSpec.from_t_max(1000)
    with pytest.raises(InfeasibleError) as info:
        solve_lambda_search(g, dl)
    assert info.value.min_latency > 1000


@pytest.mark.parametrize("seed", range(40))
def test_search_feasible_and_bounded_by_exact(seed):
    doc, g, dl = suite_instance(seed)
    if num_paths(g) > 20_000:
        pytest.skip("exhaustive reference limited to small graphs")
    exact = brute_constrained(g, dl)
    for solve in (solve_lambda_search, marginal_utility_jump_search):
        sched, report = solve(g, dl)
        assert sched.feasible
        assert sched.e_tot >= exact[0]
        # Lagrangian dual bound never exceeds the true optimum
        assert report.lower_bound <= exact[0] + 1


def test_search_on_three_layers_is_feasible_and_bounded():
    g = _three_layer_graph()
    for t_max in (30_000_000, 40_000_000, 60_000_000):
        dl = DeadlineSpec.from_t_max(t_max, idle_power=30_000)
        exact = brute_constrained(g, dl)
        if exact is None:
            continue
        sched, _ = solve_lambda_search(g, dl)
        assert sched.t_infer <= dl.t_max
        assert sched.e_tot >= exact[0]


def test_jump_matches_lambda_when_unconstrained():
    doc, g, _ = suite_instance(5)
    dl = doc.deadline_from_t_max(10**15)
    assert marginal_utility_jump_search(g, dl)[0] == solve_lambda_search(g, dl)[0]


def test_jump_matches_lambda_on_single_layer():
    for seed in range(10):
        doc = generate_random_instance(seed, num_layers=1, num_domains=2, menu_levels=4)
        g = build_graph(doc.workload, RailSet(doc.menu.levels), doc.transition_model)
        t = sorted(int(x) for x in g.t_op[0])
        dl = doc.deadline_from_t_max(t[len(t) // 2])
        a = solve_lambda_search(g, dl)[0]
        b = marginal_utility_jump_search(g, dl)[0]
        assert a.e_tot == b.e_tot


def test_schedule_decomposition():
    doc, g, dl = suite_instance(11)
    sched, _ = solve_lambda_search(g, dl)
    assert sched.e_tot == sched.e_op + sched.e_trans + sched.e_idle
    assert sched.t_infer == sched.t_op + sched.t_trans
    assert sched.e_op == sched.e_dynamic + sched.e_static
    rebuilt = build_schedule(sched.states, doc.workload, doc.transition_model, dl, sched.z, sched.rail_set)
    assert (rebuilt.e_tot, rebuilt.t_infer) == (sched.e_tot, sched.t_infer)


def test_report_counts_graph_size():
    doc, g, dl = suite_instance(12)
    _, report = solve_lambda_search(g, dl)
    assert report.num_states == g.num_states
    assert report.num_edges == g.num_edges
    assert report.dp_calls == len(report.lambda_trajectory)
    assert "wall_time" in report.as_dict()


def test_bisect_refinement_is_feasible():
    doc, g, dl = suite_instance(13)
    sched, report = solve_lambda_search(g, dl, refine="bisect", q_max=2**20)
    assert sched.feasible


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 100_000))
def test_weighted_optimum_monotone_in_lambda(seed):
    doc = generate_random_instance(seed, num_layers=4, num_domains=2, menu_levels=3, num_banks=1, window_density=0.5)
    g = build_graph(doc.workload, RailSet(doc.menu.levels), doc.transition_model)
    dl = doc.deadline(Fraction(1000))
    prev = None
    for lam in (Fraction(0), Fraction(1, 10), Fraction(1), Fraction(10), Fraction(1000), Fraction(10**6)):
        opt = weighted_optimum(g, lam, dl)
        if prev is not None:
            assert opt.t <= prev.t
            assert opt.e >= prev.e
        prev = opt
