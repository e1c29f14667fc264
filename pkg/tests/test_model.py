from fractions import Fraction

import pytest

from powerflow.model import (
    GATED,
    DeadlineSpec,
    DomainKind,
    DomainSpec,
    DutyModel,
    RailSet,
    TransitionModel,
    VoltageMenu,
    WorkloadProfile,
    evaluate_state,
    idle_energy,
    leak_power,
    make_state,
    plan_bank_gating,
    rail_switches,
    round_half_up,
    scale_dynamic_energy,
    scale_frequency,
    transition_cost,
)

from helpers import bank, dvfs, layer, single_domain_workload


def test_scale_frequency_nominal_and_linear():
    d = dvfs(0, freq=500_000)
    assert scale_frequency(d, 1200, 1200) == 500_000
    assert scale_frequency(d, 900, 1200) == 375_000


def test_scale_frequency_floors():
    assert scale_frequency(dvfs(0, freq=100_000), 1300, 1200) == 108_333


def test_scale_frequency_gated_raises():
    with pytest.raises(ValueError, match="frequency undefined for gated domain"):
        scale_frequency(dvfs(0), GATED, 1200)


def test_scale_frequency_uses_table():
    d = DomainSpec(0, DomainKind.DVFS, 500_000, vf_table=((900, 123), (1200, 500_000)))
    assert scale_frequency(d, 900, 1200) == 123


def test_scale_dynamic_energy_examples():
    assert scale_dynamic_energy(1000, 1200, 1200) == 1000
    assert scale_dynamic_energy(1000, 900, 1200) == 563
    assert scale_dynamic_energy(0, 1000, 1200) == 0


def test_round_half_up():
    assert round_half_up(Fraction(5, 2)) == 3
    assert round_half_up(Fraction(-5, 2)) == -2
    assert round_half_up(Fraction(7, 3)) == 2


def test_leak_power_linear_in_voltage():
    d = dvfs(0, leak=300_000)
    assert leak_power(d, 1200, 1200) == 300_000
    assert leak_power(d, 900, 1200) == 225_000
    assert leak_power(d, GATED, 1200) == 0


def test_evaluate_state_single_domain():
    w = single_domain_workload()
    cost = evaluate_state(w.layers[0], (1200,), w)
    assert (cost.t_op, cost.e_op, cost.leak) == (2_000_000, 1000, 0)
    cost = evaluate_state(w.layers[0], (900,), w)
    assert (cost.t_op, cost.e_op) == (2_666_667, 563)


def test_evaluate_state_bottleneck_is_max():
    w = WorkloadProfile(
        "two",
        (dvfs(0, freq=500_000), dvfs(1, freq=100_000)),
        (layer(1, [1000, 1000], [10, 10]),),
    )
    assert evaluate_state(w.layers[0], (1200, 1200), w).t_op == 10_000_000


def test_evaluate_state_leakage_over_layer():
    w = single_domain_workload(leak=1000)
    cost = evaluate_state(w.layers[0], (1200,), w)
    # 1000 nW over 2 us = 2000 fJ
    assert cost.e_static == 2000
    assert cost.e_op == 3000


def test_evaluate_state_gated_domain_with_work_raises():
    w = single_domain_workload()
    with pytest.raises(ValueError, match="infeasible state"):
        evaluate_state(w.layers[0], (GATED,), w)


def test_evaluate_state_is_deterministic():
    w = single_domain_workload(leak=777)
    assert evaluate_state(w.layers[0], (1000,), w) == evaluate_state(w.layers[0], (1000,), w)


def _bank_workload(windows=((1, Fraction(0), Fraction(1, 2)),), wake_energy=100, wake_latency=5_000):
    return WorkloadProfile(
        "banked",
        (dvfs(0), bank(1, leak=1000, wake_energy=wake_energy, wake_latency=wake_latency)),
        (layer(1, [500_000, 0], [1000, 0], act=[1, Fraction(1, 2)], windows=windows),),
    )


def test_plan_bank_gating_break_even():
    w = _bank_workload()
    d = w.domains[1]
    plan = plan_bank_gating(w.layers[0], d, 2_000_000_000, 1000)
    # window of 1 ms at 1000 nW burns 1e6 fJ; one wake costs 100 fJ
    assert plan.wake_events == 1
    assert plan.leakage_saved == 1_000_000
    assert plan.net_saved == 1_000_000 - 100


def test_plan_bank_gating_window_shorter_than_wake():
    w = _bank_workload(wake_latency=10**12)
    plan = plan_bank_gating(w.layers[0], w.domains[1], 2_000_000_000, 1000)
    assert plan.wake_events == 0 and plan.net_saved == 0


def test_plan_bank_gating_below_break_even():
    w = _bank_workload(wake_energy=10**9)
    plan = plan_bank_gating(w.layers[0], w.domains[1], 2_000_000_000, 1000)
    assert plan.gated_windows == ()


def test_plan_bank_gating_no_windows():
    w = _bank_workload(windows=())
    plan = plan_bank_gating(w.layers[0], w.domains[1], 2_000_000_000, 1000)
    assert plan.gated_windows == () and plan.leakage_saved == 0


def test_gated_window_lowers_static_energy():
    w = _bank_workload()
    plain = make_state(w.layers[0], (1200, 1200), w, (False, False))
    gated = make_state(w.layers[0], (1200, 1200), w, (False, True))
    # 1 ms layer, half of it idle: 500 000 fJ of leakage for one 100 fJ wake
    assert plain.e_op - gated.e_op == 500_000 - 100
    assert gated.wake_events == 1 and gated.t_op == plain.t_op


def test_transition_cost_examples():
    tm = TransitionModel(base_switch_energy=1_000_000)
    d = (dvfs(0),)
    assert transition_cost((1000,), (1000,), d, tm) == (0, 0)
    assert transition_cost((900,), (1300,), d, tm) == (15_000, 1_000_000)
    assert transition_cost((1300,), (900,), d, tm) == (15_000, 1_000_000)


def test_transition_cost_wake():
    tm = TransitionModel()
    domains = (dvfs(0), bank(1, wake_energy=100, wake_latency=5_000))
    assert transition_cost((1200, GATED), (1200, 1200), domains, tm) == (5_000, 100)
    # turning off is free
    assert transition_cost((1200, 1200), (1200, GATED), domains, tm) == (0, 0)


def test_transition_cost_concurrent_latency_summed_energy():
    tm = TransitionModel()
    domains = (dvfs(0), dvfs(1, cs=Fraction(1, 2)))
    t, e = transition_cost((900, 900), (1300, 1300), domains, tm)
    assert t == 15_000
    assert e == 1_000_000 + 500_000


def test_switch_energy_scales_with_square_difference():
    tm = TransitionModel()
    # (1000^2 - 900^2) / (1300^2 - 900^2) = 190000 / 880000
    assert tm.switch_energy(dvfs(0), 900, 1000) == round_half_up(Fraction(1_000_000 * 190_000, 880_000))


def test_rail_switches_ignores_gating():
    assert rail_switches((900, 1000, GATED), (1000, 1000, 1200)) == 1


def test_idle_energy_examples():
    dl = DeadlineSpec(Fraction(1000), idle_power=1000)
    assert idle_energy(dl, dl.t_max) == 0
    assert idle_energy(dl, 0) == 1_000_000
    pd = DeadlineSpec(Fraction(1000), duty_model=DutyModel.POWER_DOWN, duty_wake_energy=500_000)
    assert idle_energy(pd, 0, z=0) == 500_000
    assert idle_energy(pd, pd.t_max, z=0) == 0


def test_idle_energy_deadline_violated():
    dl = DeadlineSpec(Fraction(1000))
    with pytest.raises(ValueError, match="deadline violated"):
        idle_energy(dl, dl.t_max + 1)


def test_power_down_needs_wake_latency_to_fit():
    pd = DeadlineSpec(Fraction(1000), duty_model="power_down", duty_wake_latency=100)
    assert not pd.duty_feasible(pd.t_max - 50, 0)
    assert pd.duty_feasible(pd.t_max - 50, 1)
    assert pd.duty_feasible(pd.t_max - 100, 0)


def test_deadline_t_max_from_rate():
    assert DeadlineSpec(Fraction(30)).t_max == 33_333_333_333
    assert DeadlineSpec(Fraction(1, 2)).t_max == 2 * 10**12
    with pytest.raises(ValueError):
        DeadlineSpec(Fraction(0))


def test_voltage_menu_and_rail_set():
    menu = VoltageMenu()
    assert menu.levels == (900, 950, 1000, 1050, 1100, 1150, 1200, 1250, 1300)
    assert 1050 in menu and 1060 not in menu
    assert str(RailSet((900, 1100))) == "{0.9V,1.1V}"
    with pytest.raises(ValueError):
        RailSet((1000, 900))
    with pytest.raises(ValueError):
        RailSet.of([900, 1000, 1100], n_max=2)


def test_workload_validation():
    with pytest.raises(ValueError, match="at least one layer"):
        WorkloadProfile("w", (dvfs(0),), ())
    with pytest.raises(ValueError, match="supply"):
        WorkloadProfile("w", (dvfs(0), bank(1, supply=5)), (layer(1, [1, 0], [1, 0]),))
    with pytest.raises(ValueError, match="active_fraction = 0"):
        layer(1, [5], [1], act=[0])
