"""Per-layer candidate states, structure pruning and the layered state graph."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .model import (
    GATED,
    DomainKind,
    GatingPlan,
    LayerProfile,
    PowerState,
    RailSet,
    TransitionModel,
    WorkloadProfile,
    make_state,
    plan_bank_gating,
)

__all__ = [
    "GatingPlan",
    "LayerCandidates",
    "LayeredStateGraph",
    "StateCatalog",
    "build_graph",
    "enumerate_states",
    "plan_bank_gating",
    "schedule_space_bound",
    "structure_prune",
]


@dataclass(frozen=True)
class LayerCandidates:
    layer_id: int
    states: tuple[PowerState, ...]

    def __len__(self) -> int:
        return len(self.states)


def _domain_options(workload: WorkloadProfile, layer: LayerProfile, levels: Sequence[int]) -> list[tuple]:
    opts: list[tuple] = []
    for d in workload.domains:
        if d.is_dvfs:
            opts.append(tuple(levels) if layer.is_active(d.id) else (GATED,))
        elif layer.idle_windows(d.id):
            opts.append((False, True))
        else:
            opts.append((False,))
    return opts


def _iter_assignments(workload: WorkloadProfile, layer: LayerProfile, levels: Sequence[int]):
    """Yield (assignment, window_gating) in lexicographic domain order.

    Banks follow their supply domain's rail; "no gating" precedes "gated".
    """
    domains = workload.domains
    for combo in itertools.product(*_domain_options(workload, layer, levels)):
        assignment = []
        gating = []
        skip = False
        for d, choice in zip(domains, combo):
            if d.is_dvfs:
                assignment.append(choice)
                gating.append(False)
            else:
                v = combo[d.supply]
                if v == GATED and choice:
                    skip = True
                    break
                assignment.append(v)
                gating.append(bool(choice))
        if not skip:
            yield tuple(assignment), tuple(gating)


def enumerate_states(workload: WorkloadProfile, rail_set: RailSet, layer: LayerProfile) -> LayerCandidates:
    """All valid operating points of ``layer`` whose powered domains use rails of ``rail_set``."""
    states = tuple(
        make_state(layer, a, workload, g) for a, g in _iter_assignments(workload, layer, rail_set.rails)
    )
    return LayerCandidates(layer.layer_id, states)


def _voltage_masks(states: Sequence[PowerState]) -> np.ndarray:
    levels = sorted({v for s in states for v in s.voltage_set})
    if len(levels) > 62:
        raise ValueError("too many distinct voltage levels for mask encoding")
    bit = {v: 1 << i for i, v in enumerate(levels)}
    return np.array([sum(bit[v] for v in s.voltage_set) for s in states], dtype=np.int64)


def structure_prune(candidates: LayerCandidates) -> LayerCandidates:
    """Drop states dominated by a state that uses a subset of their voltages.

    ``b`` removes ``a`` when vset(b) is a subset of vset(a) and ``b`` is no worse
    in energy, latency and leakage power, strictly better in at least one.
    """
    states = candidates.states
    if len(states) < 2:
        return candidates
    mask = _voltage_masks(states)
    e = np.array([s.e_op for s in states], dtype=np.int64)
    t = np.array([s.t_op for s in states], dtype=np.int64)
    k = np.array([s.leak for s in states], dtype=np.int64)
    subset = (mask[:, None] & ~mask[None, :]) == 0
    no_worse = (e[:, None] <= e[None, :]) & (t[:, None] <= t[None, :]) & (k[:, None] <= k[None, :])
    strict = (e[:, None] < e[None, :]) | (t[:, None] < t[None, :]) | (k[:, None] < k[None, :])
    dominated = (subset & no_worse & strict).any(axis=0)
    kept = tuple(s for s, drop in zip(states, dominated) if not drop)
    return LayerCandidates(candidates.layer_id, kept)


def schedule_space_bound(v_count: int, n_max: int, domains: int, layers: int) -> int:
    """Exact value of sum_{k=1}^{n_max} C(|V|, k) (k+1)^(D L)."""
    if min(v_count, n_max, domains, layers) < 1:
        raise ValueError("all arguments must be >= 1")
    exponent = domains * layers
    return sum(math.comb(v_count, k) * (k + 1) ** exponent for k in range(1, n_max + 1))


# ---------------------------------------------------------------------------
# Layered graph
# ---------------------------------------------------------------------------


def _transition_matrices(
    prev: Sequence[PowerState],
    nxt: Sequence[PowerState],
    workload: WorkloadProfile,
    tm: TransitionModel,
) -> tuple[np.ndarray, np.ndarray]:
    """(latency, energy) matrices of shape (|prev|, |nxt|)."""
    domains = workload.domains
    a = np.array([s.assignment for s in prev], dtype=np.int64).reshape(len(prev), len(domains))
    b = np.array([s.assignment for s in nxt], dtype=np.int64).reshape(len(nxt), len(domains))
    t = np.zeros((len(prev), len(nxt)), dtype=np.int64)
    e = np.zeros((len(prev), len(nxt)), dtype=np.int64)
    for d in domains:
        col_a, col_b = a[:, d.id], b[:, d.id]
        levels = sorted(set(col_a.tolist()) | set(col_b.tolist()))
        code = {v: i for i, v in enumerate(levels)}
        lat = np.zeros((len(levels), len(levels)), dtype=np.int64)
        en = np.zeros((len(levels), len(levels)), dtype=np.int64)
        for va, vb in itertools.product(levels, repeat=2):
            lat[code[va], code[vb]], en[code[va], code[vb]] = tm.domain_cost(d, va, vb)
        ia = np.array([code[v] for v in col_a.tolist()], dtype=np.int64)
        ib = np.array([code[v] for v in col_b.tolist()], dtype=np.int64)
        np.maximum(t, lat[ia[:, None], ib[None, :]], out=t)
        e += en[ia[:, None], ib[None, :]]
    return t, e


@dataclass(eq=False)
class LayeredStateGraph:
    """Candidate states per layer plus dense transition matrices between neighbours.

    ``trans_t[i]`` / ``trans_e[i]`` hold the costs from layer ``i`` to layer
    ``i + 1`` (0-based).  The source feeds layer 1 at no cost; the terminal
    idle state keeps the last layer's rails, so it adds no transition.
    """

    workload: WorkloadProfile
    rail_set: RailSet
    transition_model: TransitionModel
    layers: tuple[LayerCandidates, ...]
    pruned: bool = False
    t_op: list[np.ndarray] = field(init=False, repr=False)
    e_op: list[np.ndarray] = field(init=False, repr=False)
    trans_t: list[np.ndarray] = field(init=False, repr=False)
    trans_e: list[np.ndarray] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if not self.layers or any(len(c) == 0 for c in self.layers):
            raise ValueError("every layer needs at least one candidate state")
        self.t_op = [np.array([s.t_op for s in c.states], dtype=np.int64) for c in self.layers]
        self.e_op = [np.array([s.e_op for s in c.states], dtype=np.int64) for c in self.layers]
        self.trans_t, self.trans_e = [], []
        for c0, c1 in zip(self.layers, self.layers[1:]):
            t, e = _transition_matrices(c0.states, c1.states, self.workload, self.transition_model)
            self.trans_t.append(t)
            self.trans_e.append(e)

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    @property
    def sizes(self) -> list[int]:
        return [len(c) for c in self.layers]

    @property
    def num_states(self) -> int:
        return sum(self.sizes)

    @property
    def num_edges(self) -> int:
        s = self.sizes
        return sum(a * b for a, b in zip(s, s[1:]))

    def node_count(self, z_options: int = 1) -> int:
        """Layer states + source + one terminal node per (final state, duty choice)."""
        return self.num_states + 1 + len(self.layers[-1]) * z_options

    def state(self, layer_index: int, state_index: int) -> PowerState:
        return self.layers[layer_index].states[state_index]

    def path_latency_energy(self, indices: Sequence[int]) -> tuple[int, int]:
        """(sum T_op + T_trans, sum E_op + E_trans) along a state-index path."""
        t = int(sum(self.t_op[i][k] for i, k in enumerate(indices)))
        e = int(sum(self.e_op[i][k] for i, k in enumerate(indices)))
        for i in range(len(indices) - 1):
            t += int(self.trans_t[i][indices[i], indices[i + 1]])
            e += int(self.trans_e[i][indices[i], indices[i + 1]])
        return t, e

    def max_rail_indices(self) -> list[int]:
        """Per layer, the first state whose powered domains all sit on the highest rail."""
        top = self.rail_set.highest
        out = []
        for c in self.layers:
            for k, s in enumerate(c.states):
                if all(v in (GATED, top) for v in s.assignment):
                    out.append(k)
                    break
            else:
                raise ValueError(f"layer {c.layer_id} has no max-rail state")
        return out


def build_graph(
    workload: WorkloadProfile,
    rail_set: RailSet,
    tm: TransitionModel,
    prune: bool = False,
) -> LayeredStateGraph:
    layers = [enumerate_states(workload, rail_set, layer) for layer in workload.layers]
    if prune:
        layers = [structure_prune(c) for c in layers]
    return LayeredStateGraph(workload, rail_set, tm, tuple(layers), pruned=prune)


class StateCatalog:
    """Full-menu enumeration of a workload, filtered down to any rail subset.

    Enumeration is the costly step of graph construction, and the states for a
    rail subset are exactly the full-menu states whose voltages lie in it (in
    the same order), so rail exploration evaluates each state once.
    """

    def __init__(self, workload: WorkloadProfile, levels: Iterable[int]):
        self.workload = workload
        self.levels = tuple(sorted(levels))
        full = RailSet(self.levels)
        self._layers = [enumerate_states(workload, full, layer) for layer in workload.layers]
        bit = {v: 1 << i for i, v in enumerate(self.levels)}
        self._bit = bit
        self._masks = [
            np.array([sum(bit[v] for v in s.voltage_set) for s in c.states], dtype=np.int64)
            for c in self._layers
        ]

    def candidates(self, rail_set: RailSet) -> list[LayerCandidates]:
        mask = sum(self._bit[v] for v in rail_set)
        out = []
        for c, m in zip(self._layers, self._masks):
            keep = np.flatnonzero((m & ~mask) == 0)
            out.append(LayerCandidates(c.layer_id, tuple(c.states[k] for k in keep)))
        return out

    def graph(self, rail_set: RailSet, tm: TransitionModel, prune: bool = False) -> LayeredStateGraph:
        layers = self.candidates(rail_set)
        if prune:
            layers = [structure_prune(c) for c in layers]
        return LayeredStateGraph(self.workload, rail_set, tm, tuple(layers), pruned=prune)

    def max_rail_latency(self, rail_set: RailSet, tm: TransitionModel) -> int:
        """Latency of the schedule holding every powered domain at the highest rail.

        No schedule under ``rail_set`` is faster: per-layer latency falls with
        voltage, and this schedule pays no rail switches.
        """
        top = rail_set.highest
        prev = None
        total = 0
        for c in self._layers:
            state = next(
                s for s in c.states if all(v in (GATED, top) for v in s.assignment)
            )
            total += state.t_op
            if prev is not None:
                total += _pair_latency(prev, state, self.workload, tm)
            prev = state
        return total


def _pair_latency(a: PowerState, b: PowerState, workload: WorkloadProfile, tm: TransitionModel) -> int:
    pairs = zip(workload.domains, a.assignment, b.assignment)
    return max((tm.domain_cost(d, va, vb)[0] for d, va, vb in pairs), default=0)
