"""Small builders and an exhaustive reference solver shared by the tests."""

from __future__ import annotations

import itertools
from fractions import Fraction

from powerflow.model import (
    DeadlineSpec,
    DomainKind,
    DomainSpec,
    LayerProfile,
    TransitionModel,
    WorkloadProfile,
    idle_energy,
    transition_cost,
)


def dvfs(i: int, freq: int = 500_000, leak: int = 0, cs: Fraction = Fraction(1), name: str = "") -> DomainSpec:
    return DomainSpec(i, DomainKind.DVFS, freq, cs, leak, name=name or f"d{i}")


def bank(i: int, supply: int = 0, leak: int = 1_000, wake_energy: int = 100, wake_latency: int = 5_000) -> DomainSpec:
    return DomainSpec(
        i,
        DomainKind.GATED_BANK,
        0,
        Fraction(1, 4),
        leak,
        wake_energy,
        wake_latency,
        name=f"bank{i}",
        supply=supply,
    )


def layer(i: int, cycles, dyn, act=None, windows=()) -> LayerProfile:
    act = act if act is not None else [Fraction(1) if c or e else Fraction(0) for c, e in zip(cycles, dyn)]
    return LayerProfile(i, tuple(cycles), tuple(dyn), tuple(act), tuple(windows), name=f"L{i}")


def single_domain_workload(cycles: int = 1000, dyn: int = 1000, leak: int = 0) -> WorkloadProfile:
    return WorkloadProfile("one", (dvfs(0, leak=leak),), (layer(1, [cycles], [dyn]),), v_nom=1200)


def path_cost(graph, path) -> tuple[int, int]:
    """(T_infer, path energy) of a state-index path, recomputed from the model."""
    states = [graph.state(i, k) for i, k in enumerate(path)]
    t = sum(s.t_op for s in states)
    e = sum(s.e_op for s in states)
    for a, b in zip(states, states[1:]):
        tc = transition_cost(a, b, graph.workload.domains, graph.transition_model)
        t += tc.t_trans
        e += tc.e_trans
    return t, e


def all_paths(graph):
    return itertools.product(*(range(n) for n in graph.sizes))


def brute_weighted(graph, lam: Fraction, deadline: DeadlineSpec) -> Fraction:
    """Minimum over all paths and duty options of E + lam * T + relaxed idle."""
    best = None
    for path in all_paths(graph):
        t, e = path_cost(graph, path)
        for z in deadline.z_options:
            if z == 1:
                idle = Fraction(deadline.idle_power * (deadline.t_max - t), 10**6)
            else:
                idle = Fraction(deadline.duty_wake_energy)
            v = e + lam * t + idle
            if best is None or v < best:
                best = v
    return best


def brute_constrained(graph, deadline: DeadlineSpec):
    """(E_tot, T_infer, path, z) of the exact constrained optimum, or None."""
    best = None
    for path in all_paths(graph):
        t, e = path_cost(graph, path)
        for z in deadline.z_options:
            if deadline.duty_feasible(t, z):
                key = (e + idle_energy(deadline, t, z), t, path, -z)
                if best is None or key < best:
                    best = key
    if best is None:
        return None
    return best[0], best[1], best[2], -best[3]


def num_paths(graph) -> int:
    n = 1
    for s in graph.sizes:
        n *= s
    return n


def default_tm() -> TransitionModel:
    return TransitionModel()
