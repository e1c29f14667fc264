"""Exact constrained shortest path over the layered state graph.

Forward label correcting: every node keeps the labels (T, E) of partial
paths that no other label at the node dominates.  Dominance is judged on
what the label can still become, i.e. it accounts for the idle interval the
final schedule will pay, so the surviving set always contains an optimum.
"""

from __future__ import annotations

import itertools
import time

import numpy as np

from .errors import InfeasibleError, OracleCapacityError
from .model import NW_PS_PER_FJ, DeadlineSpec, idle_energy
from .solver import Schedule, SolveReport, schedule_from_indices
from .statespace import LayeredStateGraph

DEFAULT_LABEL_CAP = 10**7


def remaining_min_latency(graph: LayeredStateGraph) -> list[np.ndarray]:
    """``out[i][k]``: least latency still to pay after finishing layer ``i`` in state ``k``."""
    rem = [np.zeros(n, dtype=np.int64) for n in graph.sizes]
    for i in range(graph.num_layers - 2, -1, -1):
        nxt = graph.t_op[i + 1] + rem[i + 1]
        rem[i] = (graph.trans_t[i] + nxt[None, :]).min(axis=1)
    return rem


def _frontier(t: np.ndarray, key: np.ndarray, rank: np.ndarray) -> np.ndarray:
    """Mask of labels not dominated under (T <=, key <=); duplicates keep the lowest rank."""
    if key.dtype == object:
        order = np.array(sorted(range(len(t)), key=lambda x: (t[x], key[x], rank[x])), dtype=np.int64)
        k = key[order]
        prev_best = np.array(list(itertools.accumulate(k, min)), dtype=object)
    else:
        order = np.lexsort((rank, key, t))
        k = key[order]
        prev_best = np.minimum.accumulate(k)
    keep_sorted = np.ones(len(k), dtype=bool)
    keep_sorted[1:] = k[1:] < prev_best[:-1]
    keep = np.zeros(len(k), dtype=bool)
    keep[order] = keep_sorted
    return keep


def _keys(t: np.ndarray, e: np.ndarray, deadline: DeadlineSpec) -> list[np.ndarray]:
    """One dominance key per available duty decision.

    Staying active costs ``E + P * (t_max - T) / 1e6``; ordering by
    ``1e6 * E - P * T`` is exact and survives the final half-up rounding
    because energies are integers.  Powering down costs ``E`` plus a flat wake.
    """
    keys = []
    for z in deadline.z_options:
        if z == 1:
            p = deadline.idle_power
            if p == 0:
                keys.append(e)
            elif int(e.max()) * NW_PS_PER_FJ + int(t.max()) * p < 2**62:
                keys.append(e * NW_PS_PER_FJ - t * p)
            else:
                keys.append(e.astype(object) * NW_PS_PER_FJ - t.astype(object) * p)
        else:
            keys.append(e)
    return keys


def exact_oracle(
    graph: LayeredStateGraph,
    deadline: DeadlineSpec,
    cap: int = DEFAULT_LABEL_CAP,
    report: SolveReport | None = None,
) -> Schedule:
    """Minimum-E_tot feasible schedule, exactly.

    Ties go to the smaller T_infer, then the lexicographically smallest state
    indices.  Raises :class:`OracleCapacityError` once more than ``cap``
    labels have been generated and :class:`InfeasibleError` if no schedule
    meets the deadline.
    """
    started = time.perf_counter()
    if report is None:
        report = SolveReport("oracle")
    report.num_states = graph.num_states
    report.num_edges = graph.num_edges
    sizes = graph.sizes
    rem = remaining_min_latency(graph)
    t_max = deadline.t_max
    min_latency = int((graph.t_op[0] + rem[0]).min())
    if min_latency > t_max:
        raise InfeasibleError(
            f"infeasible instance: minimum latency {min_latency} ps exceeds t_max {t_max} ps",
            min_latency=min_latency,
        )

    # labels of the current layer, flattened over nodes
    node = np.flatnonzero(graph.t_op[0] + rem[0] <= t_max)
    lab_t = graph.t_op[0][node]
    lab_e = graph.e_op[0][node]
    lab_rank = np.arange(len(node))
    history = [(node, np.full(len(node), -1, dtype=np.int64))]
    generated = len(node)
    for i in range(graph.num_layers - 1):
        m = sizes[i + 1]
        tt, te = graph.trans_t[i], graph.trans_e[i]
        t_next, e_next = graph.t_op[i + 1], graph.e_op[i + 1]
        new_node, new_par, new_t, new_e, new_rank = [], [], [], [], []
        for j in range(m):
            t = lab_t + tt[node, j] + t_next[j]
            e = lab_e + te[node, j] + e_next[j]
            generated += len(t)
            if generated > cap:
                report.labels_generated = generated
                raise OracleCapacityError(
                    f"oracle capacity exceeded: more than {cap} labels generated (use lambda-DP)"
                )
            alive = np.flatnonzero(t + rem[i + 1][j] <= t_max)
            if alive.size == 0:
                continue
            t, e, r = t[alive], e[alive], lab_rank[alive]
            keep = np.zeros(len(alive), dtype=bool)
            for key in _keys(t, e, deadline):
                keep |= _frontier(t, key, r)
            sel = np.flatnonzero(keep)
            new_node.append(np.full(len(sel), j, dtype=np.int64))
            new_par.append(alive[sel])
            new_t.append(t[sel])
            new_e.append(e[sel])
            new_rank.append(r[sel])
        if not new_node:
            raise InfeasibleError("infeasible instance: no path meets the deadline", min_latency=min_latency)
        node = np.concatenate(new_node)
        par = np.concatenate(new_par)
        lab_t = np.concatenate(new_t)
        lab_e = np.concatenate(new_e)
        parent_rank = np.concatenate(new_rank)
        order = np.lexsort((node, parent_rank))
        lab_rank = np.empty(len(node), dtype=np.int64)
        lab_rank[order] = np.arange(len(node))
        history.append((node, par))
        report.labels_stored += len(node)

    best = None
    for idx, (t, e, r) in enumerate(zip(lab_t.tolist(), lab_e.tolist(), lab_rank.tolist())):
        for z in deadline.z_options:
            if deadline.duty_feasible(t, z):
                key = (e + idle_energy(deadline, t, z), t, r, -z)
                if best is None or key < best[0]:
                    best = (key, idx, z)
    _, idx, z = best
    path = []
    for layer_node, layer_par in reversed(history):
        path.append(int(layer_node[idx]))
        idx = int(layer_par[idx])
    path.reverse()
    report.labels_generated = generated
    report.labels_stored += len(history[0][0])
    report.wall_time = time.perf_counter() - started
    return schedule_from_indices(graph, path, deadline, z)


def solve_oracle(
    graph: LayeredStateGraph, deadline: DeadlineSpec, cap: int = DEFAULT_LABEL_CAP
) -> tuple[Schedule, SolveReport]:
    report = SolveReport("oracle" + ("+prune" if graph.pruned else ""))
    return exact_oracle(graph, deadline, cap, report), report
