"""Comparison policies: nominal, nominal + bank gating, and greedy per-layer DVFS."""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from .errors import GreedyFailedError, InfeasibleError
from .model import (
    GATED,
    DeadlineSpec,
    PowerState,
    RailSet,
    TransitionModel,
    VoltageMenu,
    WorkloadProfile,
    make_state,
    transition_cost,
)
from .solver import Schedule, build_schedule
from .statespace import StateCatalog


def nominal_states(workload: WorkloadProfile, gating: bool = False) -> list[PowerState]:
    """Per-layer states with every domain at V_nom; banks gated per window when ``gating``."""
    v = workload.v_nom
    assignment = (v,) * workload.num_domains
    states = []
    for layer in workload.layers:
        flags = tuple(
            gating and not d.is_dvfs and bool(layer.idle_windows(d.id)) for d in workload.domains
        )
        states.append(make_state(layer, assignment, workload, flags))
    return states


def _fixed_policy(workload, deadline, tm, gating: bool, label: str) -> Schedule:
    sched = build_schedule(
        nominal_states(workload, gating), workload, tm, deadline, 1, RailSet((workload.v_nom,))
    )
    if not sched.feasible:
        raise InfeasibleError(
            f"infeasible at nominal ({label}): T_infer {sched.t_infer} ps exceeds t_max {deadline.t_max} ps",
            min_latency=sched.t_infer,
        )
    return sched


def baseline_nominal(
    workload: WorkloadProfile, deadline: DeadlineSpec, tm: TransitionModel | None = None
) -> Schedule:
    """Every domain at V_nom in every layer, nothing gated, accelerator idles powered."""
    return _fixed_policy(workload, deadline, tm or TransitionModel(), False, "nominal")


def baseline_gating(
    workload: WorkloadProfile, deadline: DeadlineSpec, tm: TransitionModel | None = None
) -> Schedule:
    """Nominal voltages plus break-even gating of every bank idle window."""
    return _fixed_policy(workload, deadline, tm or TransitionModel(), True, "gating")


def _matches(state: PowerState, flags: tuple[bool, ...]) -> bool:
    # a bank on a gated supply is off anyway and carries no window plan
    return all(g == f or v == GATED for g, f, v in zip(state.window_gating, flags, state.assignment))


def _frontier(states: Sequence[PowerState], flags: tuple[bool, ...]) -> list[int]:
    """Indices of the (T_op, dynamic energy) Pareto frontier, fastest first.

    Only states whose bank gating matches the policy are eligible.
    """
    pool = [k for k, s in enumerate(states) if _matches(s, flags)]
    pool.sort(key=lambda k: (states[k].t_op, states[k].e_dynamic, states[k].e_op, k))
    out: list[int] = []
    for k in pool:
        if not out or states[k].e_dynamic < states[out[-1]].e_dynamic:
            out.append(k)
    return out


def _gate_flags(workload: WorkloadProfile, layer_index: int, gating: bool) -> tuple[bool, ...]:
    layer = workload.layers[layer_index]
    return tuple(
        gating and not d.is_dvfs and bool(layer.idle_windows(d.id)) for d in workload.domains
    )


def baseline_greedy_dvfs(
    workload: WorkloadProfile,
    deadline: DeadlineSpec,
    gating: bool = False,
    tm: TransitionModel | None = None,
    menu: VoltageMenu | None = None,
    catalog: StateCatalog | None = None,
    rail_set: RailSet | None = None,
) -> Schedule:
    """Layer-local greedy DVFS over the full voltage menu (or over ``rail_set``).

    The policy sees dynamic energy only.  Every layer starts at its
    minimum-dynamic-energy voltages; while the schedule (with its real
    transition overheads) misses the deadline, the layer upgrade saving the
    most latency per fJ of added dynamic energy is applied.  Leakage, idle
    energy and transitions never enter a decision, only the final costing.
    With ``gating`` every bank idle window is gated when it breaks even.
    """
    tm = tm or TransitionModel()
    menu = menu or VoltageMenu()
    if catalog is None or catalog.workload is not workload or catalog.levels != menu.levels:
        catalog = StateCatalog(workload, menu.levels)
    layers = [c.states for c in catalog.candidates(rail_set or RailSet(menu.levels))]
    fronts = []
    for i, states in enumerate(layers):
        fronts.append(_frontier(states, _gate_flags(workload, i, gating)))
    pos = [len(f) - 1 for f in fronts]
    cur = [layers[i][f[-1]] for i, f in enumerate(fronts)]
    domains = workload.domains
    trans_t = [transition_cost(a, b, domains, tm).t_trans for a, b in zip(cur, cur[1:])]
    t_infer = sum(s.t_op for s in cur) + sum(trans_t)

    def best_upgrade(i: int):
        here = cur[i]
        best = None
        for p in range(pos[i]):
            s = layers[i][fronts[i][p]]
            ratio = Fraction(here.t_op - s.t_op, s.e_dynamic - here.e_dynamic)
            if best is None or ratio > best[0]:
                best = (ratio, p)
        return best

    options = [best_upgrade(i) for i in range(len(cur))]
    while t_infer > deadline.t_max:
        live = [(-opt[0], i) for i, opt in enumerate(options) if opt is not None]
        if not live:
            raise GreedyFailedError(
                f"greedy failed to meet deadline: T_infer {t_infer} ps exceeds t_max {deadline.t_max} ps",
                min_latency=t_infer,
            )
        _, i = min(live)
        pos[i] = options[i][1]
        t_infer -= cur[i].t_op
        cur[i] = layers[i][fronts[i][pos[i]]]
        t_infer += cur[i].t_op
        for k in (i - 1, i):
            if 0 <= k < len(trans_t):
                t_infer -= trans_t[k]
                trans_t[k] = transition_cost(cur[k], cur[k + 1], domains, tm).t_trans
                t_infer += trans_t[k]
        options[i] = best_upgrade(i)
    return build_schedule(cur, workload, tm, deadline, 1)


POLICIES = ("nominal", "gating", "greedy", "greedy+gating", "powerflow")
