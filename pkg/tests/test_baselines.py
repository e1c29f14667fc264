import random
from fractions import Fraction

import pytest

from powerflow.baselines import (
    baseline_gating,
    baseline_greedy_dvfs,
    baseline_nominal,
    nominal_states,
)
from powerflow.errors import GreedyFailedError, InfeasibleError
from powerflow.model import PS_PER_SECOND, DeadlineSpec, RailSet, TransitionModel, VoltageMenu, WorkloadProfile
from powerflow.oracle import exact_oracle
from powerflow.solver import build_schedule
from powerflow.statespace import build_graph
from powerflow.workload import generate_random_instance, interpolated_deadline, load_bundled, suite_instance

from helpers import bank, dvfs, layer

# E_tot of the nominal policy on the bundled SqueezeNet-like profile at its
# tightest feasible rate, the normalization point of the baseline comparison
SQUEEZENET_NOMINAL_E_TOT = 50_682_115_017


def test_nominal_has_no_switches_or_wakes():
    doc, _, _ = suite_instance(3)
    sched = baseline_nominal(doc.workload, doc.deadline_from_t_max(10**15), doc.transition_model)
    assert sched.rail_switches == 0 and sched.wake_events == 0
    assert all(v in (0, doc.workload.v_nom) for s in sched.states for v in s.assignment)


def test_nominal_equals_reevaluation():
    doc = load_bundled("resnet18-like")
    dl = doc.deadline(30)
    sched = baseline_nominal(doc.workload, dl, doc.transition_model)
    again = build_schedule(nominal_states(doc.workload), doc.workload, doc.transition_model, dl)
    assert (sched.e_tot, sched.t_infer) == (again.e_tot, again.t_infer)
    assert sched.e_tot == sched.e_op + sched.e_trans + sched.e_idle


def test_nominal_pinned_on_squeezenet_tightest_rate():
    doc = load_bundled("squeezenet-like")
    t_nom = baseline_nominal(doc.workload, doc.deadline(1), doc.transition_model).t_infer
    rate = Fraction(PS_PER_SECOND // t_nom)
    assert rate == 150
    sched = baseline_nominal(doc.workload, doc.deadline(rate), doc.transition_model)
    assert sched.e_tot == SQUEEZENET_NOMINAL_E_TOT


def test_nominal_infeasible():
    doc = load_bundled("squeezenet-like")
    with pytest.raises(InfeasibleError, match="infeasible at nominal"):
        baseline_nominal(doc.workload, doc.deadline(10_000), doc.transition_model)


def test_gating_without_windows_equals_nominal():
    doc = generate_random_instance(2, num_layers=4, num_domains=2, menu_levels=3)
    dl = doc.deadline_from_t_max(10**15)
    assert baseline_gating(doc.workload, dl) == baseline_nominal(doc.workload, dl)


def test_gating_removes_idle_bank_leakage():
    # the bank has no work in layer 1: gating its all-layer window saves leakage minus one wake
    w = WorkloadProfile(
        "idle-bank",
        (dvfs(0), bank(1, leak=10_000, wake_energy=100)),
        (layer(1, [500_000, 0], [1000, 0], act=[1, 0]),),
    )
    dl = DeadlineSpec(Fraction(1))
    nom = baseline_nominal(w, dl)
    gated = baseline_gating(w, dl)
    # 1 ms layer: 10 uW of bank leakage is 10 000 000 fJ
    assert nom.e_tot - gated.e_tot == 10_000_000 - 100
    assert gated.wake_events == 1


@pytest.mark.parametrize("name", ["squeezenet-like", "resnet18-like"])
def test_gating_never_worse_on_bundled(name):
    doc = load_bundled(name)
    for rate in (1, 30):
        dl = doc.deadline(rate)
        assert baseline_gating(doc.workload, dl, doc.transition_model).e_tot <= baseline_nominal(
            doc.workload, dl, doc.transition_model
        ).e_tot


def test_greedy_loose_deadline_starts_at_min_dynamic():
    doc, g, _ = suite_instance(4)
    dl = doc.deadline_from_t_max(10**15)
    sched = baseline_greedy_dvfs(doc.workload, dl, False, doc.transition_model, doc.menu)
    for c, s in zip(g.layers, sched.states):
        eligible = [x for x in c.states if not any(x.window_gating)]
        assert s.e_dynamic == min(x.e_dynamic for x in eligible)


def test_greedy_single_convex_layer_matches_oracle():
    # one zero-leak domain: the best-ratio upgrade is always the next level up
    w = WorkloadProfile("one", (dvfs(0),), (layer(1, [100_000], [5_000_000]),))
    menu = VoltageMenu()
    g = build_graph(w, RailSet(menu.levels), TransitionModel())
    for t in sorted({int(x) for x in g.t_op[0]}):
        dl = DeadlineSpec.from_t_max(t)
        assert baseline_greedy_dvfs(w, dl, menu=menu).e_tot == exact_oracle(g, dl).e_tot


def test_greedy_two_layer_trap_is_worse_than_oracle():
    # the optimum races both layers at 1.0 V; greedy starts from the 0.9 V states
    doc = generate_random_instance(1, num_layers=2, num_domains=2, menu_levels=2, trap=True, idle_power=0)
    g = build_graph(doc.workload, RailSet(doc.menu.levels), doc.transition_model)
    dl = doc.deadline_from_t_max(10**13)
    greedy = baseline_greedy_dvfs(doc.workload, dl, False, doc.transition_model, doc.menu)
    assert greedy.e_tot > exact_oracle(g, dl).e_tot


def test_greedy_meets_deadline_or_fails_loudly():
    doc, g, dl = suite_instance(8)
    sched = baseline_greedy_dvfs(doc.workload, dl, True, doc.transition_model, doc.menu)
    assert sched.feasible
    with pytest.raises(GreedyFailedError, match="greedy failed to meet deadline"):
        baseline_greedy_dvfs(doc.workload, doc.deadline_from_t_max(10), False, doc.transition_model, doc.menu)


def test_greedy_respects_rail_set():
    doc = load_bundled("squeezenet-like")
    rs = RailSet((900, 1100, 1300))
    sched = baseline_greedy_dvfs(doc.workload, doc.deadline(60), True, doc.transition_model, doc.menu, rail_set=rs)
    assert {v for s in sched.states for v in s.voltage_set} <= set(rs)


def test_greedy_trap_gap_rate_pinned():
    # measured over 100 trap instances (8 layers, 2 domains, 4 levels)
    hits = 0
    for seed in range(100):
        doc = generate_random_instance(seed, num_layers=8, num_domains=2, menu_levels=4, trap=True)
        g = build_graph(doc.workload, RailSet(doc.menu.levels), doc.transition_model)
        dl = interpolated_deadline(doc, g, Fraction(random.Random(f"trap-{seed}").randint(0, 9), 10))
        try:
            greedy = baseline_greedy_dvfs(doc.workload, dl, False, doc.transition_model, doc.menu).e_tot
        except GreedyFailedError:
            greedy = None
        if greedy is None or greedy > exact_oracle(g, dl).e_tot:
            hits += 1
    assert hits == 67
