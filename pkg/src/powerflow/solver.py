"""Lagrangian (lambda-DP) solver over the layered state graph.

For a fixed multiplier ``lam`` (fJ per ps) a forward DP finds the exact
minimum of ``E + lam * T`` over all paths, idle interval included.  A
parametric search over ``lam`` then looks for the cheapest schedule that
meets the deadline.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import InfeasibleError
from .model import (
    GATED,
    NW_PS_PER_FJ,
    DeadlineSpec,
    PowerState,
    RailSet,
    TransitionCost,
    TransitionModel,
    WorkloadProfile,
    idle_energy,
    rail_switches,
    transition_cost,
)
from .statespace import LayeredStateGraph


# ---------------------------------------------------------------------------
# Schedules
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Schedule:
    """A full power-state schedule with its independently recomputed costs.

    ``transitions[i]`` is the overhead paid on entering layer ``i`` (the
    first entry is always zero).  Times in ps, energies in fJ.
    """

    rail_set: RailSet
    states: tuple[PowerState, ...]
    z: int
    t_max: int
    t_op: int
    t_trans: int
    t_infer: int
    e_op: int
    e_trans: int
    e_idle: int
    e_tot: int
    e_dynamic: int
    e_static: int
    feasible: bool
    transitions: tuple[TransitionCost, ...]
    rail_switches: int
    wake_events: int
    indices: tuple[int, ...] | None = None

    @property
    def slack(self) -> int:
        return self.t_max - self.t_infer

    @property
    def num_layers(self) -> int:
        return len(self.states)

    def summary(self) -> dict:
        return {
            "rail_set": list(self.rail_set.rails),
            "z": self.z,
            "feasible": self.feasible,
            "t_max_ps": self.t_max,
            "t_infer_ps": self.t_infer,
            "t_op_ps": self.t_op,
            "t_trans_ps": self.t_trans,
            "e_tot_fj": self.e_tot,
            "e_op_fj": self.e_op,
            "e_trans_fj": self.e_trans,
            "e_idle_fj": self.e_idle,
            "e_dynamic_fj": self.e_dynamic,
            "e_static_fj": self.e_static,
            "rail_switches": self.rail_switches,
            "wake_events": self.wake_events,
        }


def build_schedule(
    states: Sequence[PowerState],
    workload: WorkloadProfile,
    tm: TransitionModel,
    deadline: DeadlineSpec,
    z: int = 1,
    rail_set: RailSet | None = None,
    indices: Sequence[int] | None = None,
) -> Schedule:
    """Cost a state sequence from scratch with the model's transition and idle rules."""
    states = tuple(states)
    if len(states) != workload.num_layers:
        raise ValueError("schedule must hold one state per layer")
    trans = [TransitionCost(0, 0)]
    trans += [transition_cost(a, b, workload.domains, tm) for a, b in zip(states, states[1:])]
    t_op = sum(s.t_op for s in states)
    t_trans = sum(t for t, _ in trans)
    t_infer = t_op + t_trans
    e_op = sum(s.e_op for s in states)
    e_trans = sum(e for _, e in trans)
    feasible = deadline.duty_feasible(t_infer, z)
    e_idle = idle_energy(deadline, t_infer, z) if feasible else 0
    if rail_set is None:
        used = {v for s in states for v in s.voltage_set}
        rail_set = RailSet.of(used or {workload.v_nom})
    switches = sum(rail_switches(a.assignment, b.assignment) for a, b in zip(states, states[1:]))
    wakes = sum(s.wake_events for s in states)
    wakes += sum(
        1
        for a, b in zip(states, states[1:])
        for va, vb in zip(a.assignment, b.assignment)
        if va == GATED and vb != GATED
    )
    return Schedule(
        rail_set=rail_set,
        states=states,
        z=z,
        t_max=deadline.t_max,
        t_op=t_op,
        t_trans=t_trans,
        t_infer=t_infer,
        e_op=e_op,
        e_trans=e_trans,
        e_idle=e_idle,
        e_tot=e_op + e_trans + e_idle,
        e_dynamic=sum(s.e_dynamic for s in states),
        e_static=sum(s.e_static for s in states),
        feasible=feasible,
        transitions=tuple(trans),
        rail_switches=switches,
        wake_events=wakes,
        indices=tuple(indices) if indices is not None else None,
    )


def schedule_from_indices(
    graph: LayeredStateGraph, indices: Sequence[int], deadline: DeadlineSpec, z: int = 1
) -> Schedule:
    states = [graph.state(i, k) for i, k in enumerate(indices)]
    return build_schedule(
        states, graph.workload, graph.transition_model, deadline, z, graph.rail_set, indices
    )


def best_duty(deadline: DeadlineSpec, t_infer: int, e_path: int) -> tuple[int, int] | None:
    """(e_tot, z) of the cheapest feasible duty decision, or None if none fits."""
    best = None
    for z in deadline.z_options:
        if deadline.duty_feasible(t_infer, z):
            cand = (e_path + idle_energy(deadline, t_infer, z), -z)
            if best is None or cand < best:
                best = cand
    return None if best is None else (best[0], -best[1])


def relaxed_idle(deadline: DeadlineSpec, t_infer: int, z: int) -> Fraction:
    """Idle energy extended linearly past the deadline (exact, unrounded)."""
    if z == 1:
        return Fraction(deadline.idle_power * (deadline.t_max - t_infer), NW_PS_PER_FJ)
    return Fraction(deadline.duty_wake_energy)


# ---------------------------------------------------------------------------
# Fixed-lambda DP
# ---------------------------------------------------------------------------


def _min_weighted_path(graph: LayeredStateGraph, a: int, b: int) -> tuple[tuple[int, ...], int, int]:
    """Path minimizing ``a * E + b * T`` (``a > 0``); ties: smaller T, then lexicographic indices.

    Candidates are screened in float64 and every surviving near-tie is settled
    in exact integer arithmetic, so the result is exact for any ``a``, ``b``.
    """
    e0, t0 = graph.e_op[0], graph.t_op[0]
    cost = [a * e + b * t for e, t in zip(e0.tolist(), t0.tolist())]
    t_pre = t0.copy()
    e_pre = e0.copy()
    rank = np.arange(len(e0))
    parents: list[np.ndarray] = []
    af, bf = float(a), float(b)
    e_span, t_span = int(e0.max()), int(t0.max())
    for i in range(graph.num_layers - 1):
        e_cand = graph.trans_e[i] + graph.e_op[i + 1][None, :]
        t_cand = graph.trans_t[i] + graph.t_op[i + 1][None, :]
        e_span += int(e_cand.max())
        t_span += int(t_cand.max())
        cost_f = np.array([float(c) for c in cost])
        scores = cost_f[:, None] + (af * e_cand + bf * t_cand)
        best = scores.min(axis=0)
        # float64 error here is a few ulps of the span; 1e-12 leaves a wide margin
        tol = 1e-12 * (abs(af) * e_span + abs(bf) * t_span) + 1.0
        near = scores <= best[None, :] + tol
        counts = near.sum(axis=0).tolist()
        arg = scores.argmin(axis=0)
        m = e_cand.shape[1]
        cols = np.arange(m)
        e_sel = e_cand[arg, cols].tolist()
        t_sel = t_cand[arg, cols].tolist()
        par = arg.tolist()
        new_cost = [0] * m
        for j in range(m):
            if counts[j] == 1:
                new_cost[j] = cost[par[j]] + a * e_sel[j] + b * t_sel[j]
                continue
            best_key = None
            for k in np.flatnonzero(near[:, j]).tolist():
                ec, tc = int(e_cand[k, j]), int(t_cand[k, j])
                key = (cost[k] + a * ec + b * tc, int(t_pre[k]) + tc, int(rank[k]), k)
                if best_key is None or key < best_key:
                    best_key = key
            new_cost[j] = best_key[0]
            par[j] = best_key[3]
        par_arr = np.array(par, dtype=np.int64)
        t_pre = t_pre[par_arr] + t_cand[par_arr, cols]
        e_pre = e_pre[par_arr] + e_cand[par_arr, cols]
        order = np.lexsort((cols, rank[par_arr]))
        rank = np.empty(m, dtype=np.int64)
        rank[order] = np.arange(m)
        parents.append(par_arr)
        cost = new_cost
    last = min(range(len(cost)), key=lambda j: (cost[j], int(t_pre[j]), int(rank[j])))
    path = [last]
    for par_arr in reversed(parents):
        path.append(int(par_arr[path[-1]]))
    path.reverse()
    return tuple(path), int(t_pre[last]), int(e_pre[last])


@dataclass(frozen=True)
class WeightedOptimum:
    """Result of one DP pass: the minimizing path and its weighted cost.

    ``value`` is ``E + idle + lam * T`` with the idle term in its exact linear
    (relaxed) form; ``e`` is the path energy without idle.
    """

    lam: Fraction
    indices: tuple[int, ...]
    z: int
    t: int
    e: int
    value: Fraction

    @property
    def relaxed_energy(self) -> Fraction:
        return self.value - self.lam * self.t


def weighted_optimum(graph: LayeredStateGraph, lam: Fraction, deadline: DeadlineSpec) -> WeightedOptimum:
    """Exact minimizer of ``E_tot + lam * T_infer`` over paths and duty decisions."""
    lam = Fraction(lam)
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    best = None
    for z in deadline.z_options:
        lam_eff = lam - Fraction(deadline.idle_power, NW_PS_PER_FJ) if z == 1 else lam
        idx, t, e = _min_weighted_path(graph, lam_eff.denominator, lam_eff.numerator)
        value = e + lam * t + relaxed_idle(deadline, t, z)
        key = (value, t, idx, -z)
        if best is None or key < best[0]:
            best = (key, WeightedOptimum(lam, idx, z, t, e, value))
    return best[1]


def dp_fixed_lambda(graph: LayeredStateGraph, lam: Fraction, deadline: DeadlineSpec) -> Schedule:
    """Weighted-optimal schedule for one multiplier; feasibility is flagged, not enforced."""
    opt = weighted_optimum(graph, lam, deadline)
    return schedule_from_indices(graph, opt.indices, deadline, opt.z)


def time_dominant_lambda(graph: LayeredStateGraph, deadline: DeadlineSpec) -> Fraction:
    """A multiplier large enough that one picosecond outweighs any energy difference."""
    bound = sum(int(e.max()) for e in graph.e_op) + sum(int(e.max()) for e in graph.trans_e)
    return Fraction(bound + deadline.idle_power + deadline.duty_wake_energy + 1)


# ---------------------------------------------------------------------------
# Parametric search
# ---------------------------------------------------------------------------


@dataclass
class SolveReport:
    solver: str
    dp_calls: int = 0
    lambda_trajectory: list[Fraction] = field(default_factory=list)
    lambda_star: Fraction | None = None
    lower_bound: Fraction | None = None
    jump_points: list[Fraction] = field(default_factory=list)
    labels_generated: int = 0
    labels_stored: int = 0
    num_states: int = 0
    num_edges: int = 0
    wall_time: float = 0.0

    def as_dict(self) -> dict:
        out = asdict(self)
        for key in ("lambda_star", "lower_bound"):
            if out[key] is not None:
                out[key] = str(out[key])
        out["lambda_trajectory"] = [str(x) for x in self.lambda_trajectory]
        out["jump_points"] = [str(x) for x in self.jump_points]
        return out


class _Search:
    """Shared bookkeeping: DP calls, the best feasible path seen, the dual bound."""

    def __init__(self, graph: LayeredStateGraph, deadline: DeadlineSpec, report: SolveReport):
        self.graph = graph
        self.deadline = deadline
        self.report = report
        self.best: tuple | None = None
        report.num_states = graph.num_states
        report.num_edges = graph.num_edges

    def dp(self, lam: Fraction) -> WeightedOptimum:
        opt = weighted_optimum(self.graph, lam, self.deadline)
        self.report.dp_calls += 1
        self.report.lambda_trajectory.append(opt.lam)
        bound = opt.value - opt.lam * self.deadline.t_max
        if self.report.lower_bound is None or bound > self.report.lower_bound:
            self.report.lower_bound = bound
        self.offer(opt.indices, opt.t, opt.e)
        return opt

    def offer(self, indices: tuple[int, ...], t: int, e: int) -> None:
        duty = best_duty(self.deadline, t, e)
        if duty is None:
            return
        key = (duty[0], t, indices, -duty[1])
        if self.best is None or key < self.best:
            self.best = key

    def feasible(self, opt: WeightedOptimum) -> bool:
        return opt.t <= self.deadline.t_max

    def refine(self, lo: WeightedOptimum, hi: WeightedOptimum, mode: str, max_iter: int, q_max: int) -> None:
        """Shrink the bracket (lo infeasible, hi feasible) around the deadline.

        ``crossing`` splits at the multiplier where the two bracketing
        schedules tie; if nothing beats them there, no supported schedule
        lies between them and the search is exhaustive.  ``bisect`` halves
        the bracket until it is narrower than ``1 / q_max``.
        """
        for _ in range(max_iter):
            if mode == "crossing":
                lam = (hi.relaxed_energy - lo.relaxed_energy) / (lo.t - hi.t)
                if lam >= hi.lam:
                    break
                if lam <= lo.lam:
                    lam = (lo.lam + hi.lam) / 2
                opt = self.dp(lam)
                if opt.value == hi.relaxed_energy + lam * hi.t:
                    break
            elif mode == "bisect":
                if hi.lam - lo.lam < Fraction(1, q_max):
                    break
                opt = self.dp((lo.lam + hi.lam) / 2)
            else:
                raise ValueError(f"unknown refinement mode {mode!r}")
            if self.feasible(opt):
                hi = opt
            else:
                lo = opt
        self.report.lambda_star = hi.lam

    def schedule(self) -> Schedule:
        e_tot, t, indices, neg_z = self.best
        return schedule_from_indices(self.graph, indices, self.deadline, -neg_z)

    def probe(self) -> WeightedOptimum:
        opt = self.dp(time_dominant_lambda(self.graph, self.deadline))
        if not self.feasible(opt):
            raise InfeasibleError(
                f"infeasible instance: minimum latency {opt.t} ps exceeds t_max {self.deadline.t_max} ps",
                min_latency=opt.t,
            )
        return opt


def solve_lambda_search(
    graph: LayeredStateGraph,
    deadline: DeadlineSpec,
    refine: str = "crossing",
    max_iter: int = 64,
    q_max: int = 2**40,
) -> tuple[Schedule, SolveReport]:
    """lambda-DP: start at lam = 0, double from 1 fJ/ps until feasible, then refine.

    The cheapest feasible schedule met anywhere during the search is returned.
    Raises :class:`InfeasibleError` when even the fastest schedule is late.
    """
    started = time.perf_counter()
    report = SolveReport("lambda-dp" + ("+prune" if graph.pruned else ""))
    search = _Search(graph, deadline, report)
    lo = search.dp(Fraction(0))
    if search.feasible(lo):
        report.lambda_star = Fraction(0)
    else:
        fastest = search.probe()
        lo, hi = _double_until_feasible(search, lo, Fraction(1), fastest)
        search.refine(lo, hi, refine, max_iter, q_max)
    report.wall_time = time.perf_counter() - started
    return search.schedule(), report


def _double_until_feasible(
    search: _Search, lo: WeightedOptimum, lam: Fraction, fastest: WeightedOptimum
) -> tuple[WeightedOptimum, WeightedOptimum]:
    """Double lam until the DP schedule is feasible; returns the final (lo, hi) bracket."""
    while lam < fastest.lam:
        opt = search.dp(lam)
        if search.feasible(opt):
            return lo, opt
        lo = opt
        lam *= 2
    return lo, fastest


# ---------------------------------------------------------------------------
# Marginal-utility jump search
# ---------------------------------------------------------------------------


def _layer_moves(graph: LayeredStateGraph, cur: list[int], i: int, idle_power: int):
    """(dT, dE) arrays for moving layer ``i`` to each of its states, neighbours fixed."""
    k = cur[i]
    dt = graph.t_op[i] - graph.t_op[i][k]
    de = graph.e_op[i] - graph.e_op[i][k]
    if i > 0:
        p = cur[i - 1]
        dt = dt + graph.trans_t[i - 1][p, :] - graph.trans_t[i - 1][p, k]
        de = de + graph.trans_e[i - 1][p, :] - graph.trans_e[i - 1][p, k]
    if i < graph.num_layers - 1:
        n = cur[i + 1]
        dt = dt + graph.trans_t[i][:, n] - graph.trans_t[i][k, n]
        de = de + graph.trans_e[i][:, n] - graph.trans_e[i][k, n]
    return dt, de


def _best_move(graph: LayeredStateGraph, cur: list[int], i: int, idle_power: int):
    """Best latency-reducing move of layer ``i`` as (priority key, state, dT, dE) or None.

    Moves that do not raise the idle-inclusive energy rank first (largest
    latency cut wins); the rest rank by latency saved per extra fJ.
    """
    dt, de = _layer_moves(graph, cur, i, idle_power)
    faster = np.flatnonzero(dt < 0)
    if faster.size == 0:
        return None
    dt_f = dt[faster].astype(float)
    de_rel = de[faster].astype(float) - idle_power * dt_f / NW_PS_PER_FJ
    free = de_rel <= 0
    if free.any():
        cand = faster[free]
        j = int(cand[np.argmin(dt[cand])])
        key = (0, float(dt[j]))
    else:
        ratio = -dt_f / de_rel
        j = int(faster[np.argmax(ratio)])
        key = (1, -float(ratio.max()))
    return key, j, int(dt[j]), int(de[j])


def upgrade_walk(
    graph: LayeredStateGraph, deadline: DeadlineSpec, start: Sequence[int]
) -> tuple[tuple[int, ...], list[Fraction]]:
    """Greedy latency-reduction walk from ``start`` until the deadline is met.

    Each step applies the single-layer change with the best marginal utility.
    Returns the final path and the multiplier ``dE_rel / -dT`` of every step
    that costs energy (its jump point).
    """
    cur = list(start)
    t, _ = graph.path_latency_energy(cur)
    power = deadline.idle_power
    moves = [_best_move(graph, cur, i, power) for i in range(graph.num_layers)]
    jumps: list[Fraction] = []
    while t > deadline.t_max:
        live = [(m[0], i) for i, m in enumerate(moves) if m is not None]
        if not live:
            break
        _, i = min(live)
        _, j, dt, de = moves[i]
        rel = Fraction(de) - Fraction(power * dt, NW_PS_PER_FJ)
        if rel > 0:
            jumps.append(rel / -dt)
        cur[i] = j
        t += dt
        for k in (i - 1, i, i + 1):
            if 0 <= k < graph.num_layers:
                moves[k] = _best_move(graph, cur, k, power)
    return tuple(cur), jumps


def marginal_utility_jump_search(
    graph: LayeredStateGraph,
    deadline: DeadlineSpec,
    refine: str = "crossing",
    max_iter: int = 64,
    q_max: int = 2**40,
) -> tuple[Schedule, SolveReport]:
    """lambda-DP seeded by the jump points of a greedy upgrade walk.

    The walk's multipliers are sorted and binary-searched for the first one
    whose DP schedule meets the deadline; the bracket found is then refined as
    in :func:`solve_lambda_search`.
    """
    started = time.perf_counter()
    report = SolveReport("jump-dp" + ("+prune" if graph.pruned else ""))
    search = _Search(graph, deadline, report)
    lo = search.dp(Fraction(0))
    if search.feasible(lo):
        report.lambda_star = Fraction(0)
    else:
        fastest = search.probe()
        walk, jumps = upgrade_walk(graph, deadline, lo.indices)
        search.offer(walk, *graph.path_latency_energy(walk))
        seeds = sorted({x for x in jumps if 0 < x < fastest.lam})
        report.jump_points = seeds
        hi = None
        left, right = 0, len(seeds) - 1
        while left <= right:
            mid = (left + right) // 2
            opt = search.dp(seeds[mid])
            if search.feasible(opt):
                hi, right = opt, mid - 1
            else:
                lo, left = opt, mid + 1
        if hi is None:
            start = max(lo.lam * 2, Fraction(1))
            lo, hi = _double_until_feasible(search, lo, start, fastest)
        search.refine(lo, hi, refine, max_iter, q_max)
    report.wall_time = time.perf_counter() - started
    return search.schedule(), report
