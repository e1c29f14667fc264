"""Command-line experiment runner: solve one profile or sweep rates, rails and costs.

Times are reported in ps and energies in fJ unless a column or flag names
another unit.  Wall-clock timings go to stderr so that stdout (CSV or JSON)
is byte-stable across runs.
"""

from __future__ import annotations

import argparse
import functools
import statistics
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from . import __version__
from .baselines import POLICIES, baseline_gating, baseline_greedy_dvfs, baseline_nominal, nominal_states
from .errors import InfeasibleError, OracleCapacityError, PowerFlowError
from .model import PS_PER_SECOND, RailSet, WorkloadProfile, round_half_up
from .oracle import DEFAULT_LABEL_CAP, exact_oracle
from .railopt import SOLVERS, RailExplorer, evenly_spaced_rails
from .solver import Schedule, marginal_utility_jump_search, solve_lambda_search
from .statespace import StateCatalog, structure_prune
from .workload import (
    SCHEDULE_SCHEMA_VERSION,
    SCHEMA_VERSION,
    ProfileDocument,
    dump_schedule,
    emit_schedule_table,
    resolve_profile,
    suite_instance,
    write_csv,
)

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_INPUT = 3
EXIT_CAPACITY = 4

FJ_PER_NJ = 10**6
DEFAULT_RATES = "1,2,5,10,20,30,60,100"
DEFAULT_TRANSITION_NJ = "0.1,1,10,100,1000"

BREAKDOWN = ("t_infer", "e_tot", "e_op", "e_trans", "e_idle", "e_dynamic", "e_static", "rail_switches", "wake_events")


# ---------------------------------------------------------------------------
# Argument helpers
# ---------------------------------------------------------------------------


def parse_rates(text: str) -> list[Fraction]:
    """``"1,5,30"`` or an inclusive range ``"start:stop:step"`` (FPS)."""
    text = text.strip()
    if ":" in text:
        parts = [Fraction(p) for p in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise ValueError(f"bad rate range {text!r} (use start:stop:step)")
        start, stop, step = parts
        out = []
        while start <= stop:
            out.append(start)
            start += step
    else:
        out = [Fraction(p) for p in text.split(",") if p.strip()]
    if not out or any(r <= 0 for r in out):
        raise ValueError(f"rates must be positive: {text!r}")
    return sorted(set(out))


def parse_int_range(text: str) -> list[int]:
    """``"1-4"`` or ``"1,2,3"``."""
    text = text.strip()
    if "-" in text:
        lo, hi = (int(p) for p in text.split("-", 1))
        out = list(range(lo, hi + 1))
    else:
        out = [int(p) for p in text.split(",") if p.strip()]
    if not out or min(out) < 1:
        raise ValueError(f"counts must be >= 1: {text!r}")
    return sorted(set(out))


def nj_to_fj(nj: Fraction | str) -> int:
    return round_half_up(Fraction(nj) * FJ_PER_NJ)


def fmt_rate(rate: Fraction) -> str:
    return str(rate)


def fmt_ratio(x: Fraction | float) -> str:
    return f"{float(x):.6f}"


def with_transition_energy(doc: ProfileDocument, nj: Fraction | str | None) -> ProfileDocument:
    if nj is None:
        return doc
    return replace(doc, transition_model=doc.transition_model.with_switch_energy(nj_to_fj(nj)))


def max_feasible_rate(min_latency: int) -> Fraction:
    return Fraction(PS_PER_SECOND, min_latency)


@functools.lru_cache(maxsize=4)
def catalog_for(workload: WorkloadProfile, levels: tuple[int, ...]) -> StateCatalog:
    return StateCatalog(workload, levels)


@functools.lru_cache(maxsize=8)
def explorer_for(doc: ProfileDocument, prune: bool = True) -> RailExplorer:
    catalog = catalog_for(doc.workload, doc.menu.levels)
    return RailExplorer(doc.workload, doc.transition_model, doc.menu, prune, catalog)


def _map(func: Callable, items: Sequence, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, items))


def _breakdown(s: Schedule | None) -> list:
    if s is None:
        return [""] * len(BREAKDOWN)
    return [getattr(s, k) for k in BREAKDOWN]


# ---------------------------------------------------------------------------
# Policies
# ---------------------------------------------------------------------------


def run_policy(
    doc: ProfileDocument,
    policy: str,
    rate: Fraction,
    n_max: int = 3,
    solver: str = "lambda",
    prune: bool = True,
) -> Schedule | None:
    """Schedule of ``policy`` at ``rate``; None when the policy cannot meet the deadline."""
    explorer = explorer_for(doc, prune)
    deadline = doc.deadline(rate)
    w, tm = doc.workload, doc.transition_model
    try:
        if policy == "nominal":
            return baseline_nominal(w, deadline, tm)
        if policy == "gating":
            return baseline_gating(w, deadline, tm)
        if policy in ("greedy", "greedy+gating"):
            return baseline_greedy_dvfs(w, deadline, policy == "greedy+gating", tm, doc.menu, explorer.catalog)
        if policy == "powerflow":
            return explorer.optimize(deadline, n_max, solver)[1]
    except InfeasibleError:
        return None
    raise ValueError(f"unknown policy {policy!r} (choose from {', '.join(POLICIES)})")


# ---------------------------------------------------------------------------
# Sweeps (each returns a CSV header and rows)
# ---------------------------------------------------------------------------

RATE_HEADER = ["rate_fps", "policy", "feasible", "rail_set", *(f"{k}" for k in BREAKDOWN)]


def _rate_rows(args: tuple) -> list[list]:
    doc, rate, policies, n_max, solver, prune = args
    rows = []
    for policy in policies:
        s = run_policy(doc, policy, rate, n_max, solver, prune)
        rows.append([fmt_rate(rate), policy, int(s is not None), str(s.rail_set) if s else "", *_breakdown(s)])
    return rows


def sweep_rate(
    doc: ProfileDocument,
    rates: Iterable[Fraction],
    policies: Sequence[str] = POLICIES,
    n_max: int = 3,
    solver: str = "lambda",
    prune: bool = True,
    jobs: int = 1,
) -> tuple[list[str], list[list]]:
    for p in policies:
        if p not in POLICIES:
            raise ValueError(f"unknown policy {p!r} (choose from {', '.join(POLICIES)})")
    items = [(doc, Fraction(r), tuple(policies), n_max, solver, prune) for r in sorted(rates)]
    rows = [row for chunk in _map(_rate_rows, items, jobs) for row in chunk]
    order = {p: k for k, p in enumerate(POLICIES)}
    rows.sort(key=lambda r: (Fraction(r[0]), order[r[1]]))
    return RATE_HEADER, rows


RAILS_HEADER = ["n", "mode", "feasible", "rail_set", *BREAKDOWN]


def sweep_rails(
    doc: ProfileDocument,
    rate: Fraction,
    counts: Iterable[int],
    modes: Sequence[str] = ("evenly", "optimized"),
    solver: str = "lambda",
    prune: bool = True,
) -> tuple[list[str], list[list]]:
    """Energy versus rail budget: ``evenly`` uses exactly n spread levels,
    ``optimized`` the best subset of at most n levels."""
    explorer = explorer_for(doc, prune)
    deadline = doc.deadline(rate)
    rows = []
    for n in sorted(set(counts)):
        n = min(n, len(doc.menu))
        for mode in modes:
            try:
                if mode == "evenly":
                    rs, s = explorer.evenly_spaced(deadline, n, solver)
                elif mode == "optimized":
                    rs, s = explorer.optimize(deadline, n, solver)
                else:
                    raise ValueError(f"unknown rail mode {mode!r}")
            except InfeasibleError:
                rows.append([n, mode, 0, "", *_breakdown(None)])
                continue
            rows.append([n, mode, 1, str(rs), *_breakdown(s)])
    return RAILS_HEADER, rows


TRANSITION_HEADER = [
    "transition_energy_nj",
    "base_switch_energy_fj",
    "feasible",
    "rail_set",
    "e_trans_share",
    *BREAKDOWN,
]


def _transition_row(args: tuple) -> list:
    doc, rate, nj, n_max, solver, prune = args
    scaled = with_transition_energy(doc, nj)
    s = run_policy(scaled, "powerflow", rate, n_max, solver, prune)
    base = scaled.transition_model.base_switch_energy
    if s is None:
        return [str(nj), base, 0, "", "", *_breakdown(None)]
    share = Fraction(s.e_trans, s.e_tot) if s.e_tot else Fraction(0)
    return [str(nj), base, 1, str(s.rail_set), fmt_ratio(share), *_breakdown(s)]


def sweep_transition(
    doc: ProfileDocument,
    rate: Fraction,
    energies_nj: Iterable[Fraction],
    n_max: int = 3,
    solver: str = "lambda",
    prune: bool = True,
    jobs: int = 1,
) -> tuple[list[str], list[list]]:
    """Re-solve with the full-swing rail-switch energy set to each value (nJ)."""
    items = [(doc, rate, Fraction(e), n_max, solver, prune) for e in sorted(set(energies_nj))]
    return TRANSITION_HEADER, _map(_transition_row, items, jobs)


MU_HEADER = [
    "rank",
    "layer_id",
    "name",
    "layer_type",
    "marginal_utility_fj_per_ps",
    "nominal_e_op",
    "powerflow_e_op",
    "energy_reduction",
    "reduction_share",
]


def local_marginal_utility(states: Sequence, reference) -> Fraction | None:
    """Best energy saved per ps of slowdown from ``reference`` over ``states``.

    Only strictly slower states count; None when the layer has none.
    """
    best = None
    for s in states:
        if s.t_op > reference.t_op:
            mu = Fraction(reference.e_op - s.e_op, s.t_op - reference.t_op)
            if best is None or mu > best:
                best = mu
    return best


def marginal_utility_report(
    doc: ProfileDocument, rate: Fraction, n_max: int = 3, solver: str = "lambda", prune: bool = True
) -> tuple[list[str], list[list]]:
    """Layers ranked by local marginal utility next to the energy the schedule saved there."""
    explorer = explorer_for(doc, prune)
    deadline = doc.deadline(rate)
    rs, sched = explorer.optimize(deadline, n_max, solver)
    nominal = nominal_states(doc.workload)
    candidates = explorer.catalog.candidates(rs)
    total = sum(n.e_op - s.e_op for n, s in zip(nominal, sched.states))
    entries = []
    for layer, ref, cand, state in zip(doc.workload.layers, nominal, candidates, sched.states):
        mu = local_marginal_utility(cand.states, ref)
        saved = ref.e_op - state.e_op
        entries.append((mu, layer, ref.e_op, state.e_op, saved))
    # layers without a slower option sort last
    entries.sort(key=lambda x: (x[0] is None, -(x[0] or 0), x[1].layer_id))
    rows = []
    for rank, (mu, layer, e_nom, e_pf, saved) in enumerate(entries, start=1):
        share = Fraction(saved, total) if total else Fraction(0)
        rows.append(
            [
                rank,
                layer.layer_id,
                layer.name,
                layer.layer_type,
                "" if mu is None else fmt_ratio(mu),
                e_nom,
                e_pf,
                saved,
                fmt_ratio(share),
            ]
        )
    return MU_HEADER, rows


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

RANDOM_HEADER = [
    "seed",
    "layers",
    "states",
    "edges",
    "pruned_states",
    "t_max",
    "oracle_e_tot",
    "oracle_pruned_e_tot",
    "lambda_e_tot",
    "jump_e_tot",
    "lambda_gap",
    "jump_gap",
    "prune_lossless",
]


def _validate_seed(args: tuple) -> tuple[list, dict]:
    seed, cap = args
    doc, graph, deadline = suite_instance(seed)
    pruned = replace(graph, layers=tuple(structure_prune(c) for c in graph.layers), pruned=True)
    times = {}
    started = time.perf_counter()
    oracle = exact_oracle(graph, deadline, cap)
    times["oracle"] = time.perf_counter() - started
    oracle_p = exact_oracle(pruned, deadline, cap)
    lam, rep = solve_lambda_search(pruned, deadline)
    times["lambda"] = rep.wall_time
    jump, _ = marginal_utility_jump_search(pruned, deadline)
    row = [
        seed,
        graph.num_layers,
        graph.num_states,
        graph.num_edges,
        pruned.num_states,
        deadline.t_max,
        oracle.e_tot,
        oracle_p.e_tot,
        lam.e_tot,
        jump.e_tot,
        fmt_ratio(Fraction(lam.e_tot, oracle.e_tot) - 1),
        fmt_ratio(Fraction(jump.e_tot, oracle.e_tot) - 1),
        int(oracle_p.e_tot == oracle.e_tot),
    ]
    return row, times


def validate_random(
    seed: int = 0, count: int = 100, cap: int = DEFAULT_LABEL_CAP, jobs: int = 1
) -> tuple[list[str], list[list], dict]:
    """Oracle versus lambda-DP and jump search on the random suite, plus pruning losslessness."""
    results = _map(_validate_seed, [(s, cap) for s in range(seed, seed + count)], jobs)
    rows = [r for r, _ in results]
    gaps = [Fraction(r[8], r[6]) - 1 for r in rows]
    jgaps = [Fraction(r[9], r[6]) - 1 for r in rows]
    summary = {
        "instances": len(rows),
        "lambda_gap_mean": float(sum(gaps) / len(gaps)) if gaps else 0.0,
        "lambda_gap_max": float(max(gaps, default=0)),
        "jump_gap_mean": float(sum(jgaps) / len(jgaps)) if jgaps else 0.0,
        "jump_gap_max": float(max(jgaps, default=0)),
        "prune_lossless": sum(r[12] for r in rows),
        "oracle_seconds": sum(t["oracle"] for _, t in results),
        "lambda_seconds": sum(t["lambda"] for _, t in results),
    }
    return RANDOM_HEADER, rows, summary


PROFILE_HEADER = [
    "profile",
    "rate_fps",
    "rail_set",
    "feasible",
    "states",
    "pruned_states",
    "e_tot",
    "pruned_e_tot",
    "prune_lossless",
]


@dataclass
class PruneTiming:
    build_full: float = 0.0
    build_pruned: float = 0.0
    speedups: list[float] = field(default_factory=list)


def _best_time(func: Callable[[], object], repeats: int) -> tuple[float, object]:
    best, out = None, None
    for _ in range(max(1, repeats)):
        started = time.perf_counter()
        out = func()
        elapsed = time.perf_counter() - started
        best = elapsed if best is None else min(best, elapsed)
    return best, out


def prune_speedup(
    doc: ProfileDocument, rates: Iterable[Fraction], n_rails: int = 3, repeats: int = 3
) -> tuple[list[str], list[list], PruneTiming]:
    """lambda-DP with and without structure pruning on evenly spaced rails.

    Both graphs are rate-independent, so each is built once (the pruned
    build includes the pruning pass); per-rate speedups compare the search
    times, best of ``repeats`` runs each.
    """
    explorer = explorer_for(doc, True)
    rs = evenly_spaced_rails(doc.menu.levels, n_rails)
    tm = doc.transition_model
    timing = PruneTiming()
    timing.build_full, full = _best_time(lambda: explorer.catalog.graph(rs, tm, False), repeats)
    timing.build_pruned, pruned = _best_time(lambda: explorer.catalog.graph(rs, tm, True), repeats)
    rows = []
    for rate in sorted(rates):
        deadline = doc.deadline(rate)
        if explorer.min_latency(rs) > deadline.t_max:
            rows.append([doc.workload.name, fmt_rate(rate), str(rs), 0, "", "", "", "", ""])
            continue
        t_full, (s_full, _) = _best_time(lambda: solve_lambda_search(full, deadline), repeats)
        t_pruned, (s_pruned, _) = _best_time(lambda: solve_lambda_search(pruned, deadline), repeats)
        timing.speedups.append(t_full / t_pruned)
        rows.append(
            [
                doc.workload.name,
                fmt_rate(rate),
                str(rs),
                1,
                full.num_states,
                pruned.num_states,
                s_full.e_tot,
                s_pruned.e_tot,
                int(s_full.e_tot == s_pruned.e_tot),
            ]
        )
    return PROFILE_HEADER, rows, timing


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _stderr(msg: str) -> None:
    print(msg, file=sys.stderr)


def _load(args) -> ProfileDocument:
    return with_transition_energy(resolve_profile(args.profile), args.transition_energy_nj)


def _rate(args) -> Fraction:
    return Fraction(args.rate_fps)


def cmd_solve(args) -> int:
    doc = _load(args)
    rate = _rate(args)
    deadline = doc.deadline(rate)
    explorer = explorer_for(doc, not args.no_prune)
    started = time.perf_counter()
    if args.rail_set:
        rs = RailSet(tuple(int(v) for v in args.rail_set.split(",")))
        for v in rs:
            if v not in doc.menu:
                raise ValueError(f"rail {v} mV is not in the voltage menu")
    elif args.evenly:
        rs = evenly_spaced_rails(doc.menu.levels, args.rails)
    else:
        rs, _ = explorer.optimize(deadline, args.rails, args.solver)
    result = explorer.solve(rs, deadline, args.solver)
    if result is None:
        raise InfeasibleError(
            f"infeasible with rail set {rs}: minimum latency {explorer.min_latency(rs)} ps "
            f"exceeds t_max {deadline.t_max} ps",
            min_latency=explorer.min_latency(rs),
        )
    sched, report = result
    _stderr(f"wall time: {time.perf_counter() - started:.3f} s (final solve {report.wall_time:.3f} s)")
    table = emit_schedule_table(sched, doc.workload, deadline, doc.transition_model)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(dump_schedule(table))
    stats = report.as_dict()
    stats.pop("wall_time")
    if args.json:
        sys.stdout.write(dump_schedule({"schedule": table, "report": stats}))
        return EXIT_OK
    print(f"profile   {doc.workload.name} ({doc.workload.num_layers} layers)")
    print(f"rate      {fmt_rate(rate)} FPS, t_max {deadline.t_max} ps")
    print(f"rails     {rs} ({report.solver})")
    print(f"latency   T_infer {sched.t_infer} ps = T_op {sched.t_op} + T_trans {sched.t_trans}; slack {sched.slack}")
    print(
        f"energy    E_tot {sched.e_tot} fJ = E_op {sched.e_op} + E_trans {sched.e_trans} + E_idle {sched.e_idle}"
        f" (z={sched.z})"
    )
    print(f"          dynamic {sched.e_dynamic}, static {sched.e_static}")
    print(f"events    {sched.rail_switches} rail switches, {sched.wake_events} wake-ups")
    print(
        f"solver    {report.dp_calls} DP calls, {len(report.lambda_trajectory)} lambda values, "
        f"lambda* {report.lambda_star}, labels {report.labels_generated}, "
        f"states {report.num_states}, edges {report.num_edges}"
    )
    header = ["layer_id", *table["domains"], "t_op", "e_op", "trans_t", "trans_e"]
    rows = [[r["layer_id"], *r["voltages"], r["t_op"], r["e_op"], r["trans_t"], r["trans_e"]] for r in table["layers"]]
    print()
    write_csv(header, rows, sys.stdout)
    return EXIT_OK


def cmd_sweep_rate(args) -> int:
    doc = _load(args)
    started = time.perf_counter()
    header, rows = sweep_rate(
        doc,
        parse_rates(args.rates_fps),
        [p.strip() for p in args.policies.split(",")],
        args.rails,
        args.solver,
        not args.no_prune,
        args.jobs,
    )
    write_csv(header, rows, sys.stdout)
    _stderr(f"wall time: {time.perf_counter() - started:.3f} s")
    return EXIT_OK


def cmd_sweep_rails(args) -> int:
    doc = _load(args)
    started = time.perf_counter()
    modes = ("evenly", "optimized") if args.mode == "both" else (args.mode,)
    header, rows = sweep_rails(doc, _rate(args), parse_int_range(args.counts), modes, args.solver, not args.no_prune)
    write_csv(header, rows, sys.stdout)
    _stderr(f"wall time: {time.perf_counter() - started:.3f} s")
    return EXIT_OK


def cmd_sweep_transition(args) -> int:
    doc = _load(args)
    started = time.perf_counter()
    energies = [Fraction(e) for e in args.energies_nj.split(",") if e.strip()]
    header, rows = sweep_transition(doc, _rate(args), energies, args.rails, args.solver, not args.no_prune, args.jobs)
    write_csv(header, rows, sys.stdout)
    _stderr(f"wall time: {time.perf_counter() - started:.3f} s")
    return EXIT_OK


def cmd_marginal_utility(args) -> int:
    doc = _load(args)
    started = time.perf_counter()
    header, rows = marginal_utility_report(doc, _rate(args), args.rails, args.solver, not args.no_prune)
    write_csv(header, rows, sys.stdout)
    _stderr(f"wall time: {time.perf_counter() - started:.3f} s")
    return EXIT_OK


def cmd_validate(args) -> int:
    started = time.perf_counter()
    if args.profile:
        rates = parse_rates(args.rates_fps)
        all_rows, speedups = [], []
        for spec in args.profile:
            doc = with_transition_energy(resolve_profile(spec), args.transition_energy_nj)
            header, rows, timing = prune_speedup(doc, rates, args.rails, args.repeats)
            all_rows.extend(rows)
            sp = timing.speedups
            speedups.extend(sp)
            _stderr(
                f"{doc.workload.name}: graph build {timing.build_full * 1e3:.1f} ms full, "
                f"{timing.build_pruned * 1e3:.1f} ms pruned (pruning included)"
            )
            if sp:
                _stderr(
                    f"{doc.workload.name}: lambda-DP speedup from pruning median {statistics.median(sp):.2f}x, "
                    f"min {min(sp):.2f}x, mean {statistics.mean(sp):.2f}x"
                )
        write_csv(PROFILE_HEADER, all_rows, sys.stdout)
        lossless = sum(r[8] == 1 for r in all_rows)
        feasible = sum(r[3] == 1 for r in all_rows)
        _stderr(f"pruning lossless on {lossless}/{feasible} feasible points")
        if speedups:
            _stderr(f"overall pruning speedup median {statistics.median(speedups):.2f}x")
    else:
        header, rows, summary = validate_random(args.seed, args.count, args.cap, args.jobs)
        write_csv(header, rows, sys.stdout)
        _stderr(
            f"{summary['instances']} instances: lambda gap mean {summary['lambda_gap_mean']:.4%} "
            f"max {summary['lambda_gap_max']:.4%}; jump gap mean {summary['jump_gap_mean']:.4%} "
            f"max {summary['jump_gap_max']:.4%}; pruning lossless {summary['prune_lossless']}/{summary['instances']}"
        )
        _stderr(f"oracle {summary['oracle_seconds']:.3f} s, lambda-DP {summary['lambda_seconds']:.3f} s")
    _stderr(f"wall time: {time.perf_counter() - started:.3f} s")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with the input-error code rather than argparse's 2."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser, rate: bool = True, rails: bool = True) -> None:
    p.add_argument("--profile", required=True, help="profile JSON file or bundled profile name")
    if rate:
        p.add_argument("--rate-fps", "--rate", dest="rate_fps", required=True, help="target inference rate (FPS)")
    if rails:
        p.add_argument("--rails", type=int, default=3, help="rail budget n_max (default 3)")
    p.add_argument("--solver", choices=sorted(SOLVERS), default="lambda")
    p.add_argument("--no-prune", action="store_true", help="disable structure pruning")
    p.add_argument(
        "--transition-energy-nj",
        type=Fraction,
        default=None,
        help="override the full-swing rail-switch energy (nJ)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="powerflow", description=__doc__.splitlines()[0])
    parser.add_argument(
        "--version",
        action="version",
        version=f"powerflow {__version__} (profile schema {SCHEMA_VERSION}, schedule schema {SCHEDULE_SCHEMA_VERSION})",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="minimum-energy schedule for one profile and rate")
    _common(p)
    p.add_argument("--rail-set", help="explicit comma-separated rails in mV (skips rail selection)")
    p.add_argument("--evenly", action="store_true", help="use --rails evenly spaced levels")
    p.add_argument("--out", help="write the schedule table (JSON) here")
    p.add_argument("--json", action="store_true", help="print schedule table and solver report as JSON")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep-rate", help="energy per inference versus target rate, per policy")
    _common(p, rate=False)
    p.add_argument("--rates-fps", "--rates", dest="rates_fps", default=DEFAULT_RATES)
    p.add_argument("--policies", default=",".join(POLICIES))
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep_rate)

    p = sub.add_parser("sweep-rails", help="energy versus rail budget, evenly spaced and optimized")
    _common(p, rails=False)
    p.add_argument("--counts", default="1-4", help="rail counts, e.g. 1-4 or 1,3")
    p.add_argument("--mode", choices=("evenly", "optimized", "both"), default="both")
    p.set_defaults(func=cmd_sweep_rails)

    p = sub.add_parser("sweep-transition", help="energy and switching versus rail-switch energy")
    _common(p)
    p.add_argument("--energies-nj", default=DEFAULT_TRANSITION_NJ)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep_transition)

    p = sub.add_parser("marginal-utility", help="layers ranked by local marginal utility")
    _common(p)
    p.set_defaults(func=cmd_marginal_utility)

    p = sub.add_parser("validate", help="oracle gap and pruning checks")
    p.add_argument("--profile", action="append", help="check pruning on this profile (repeatable)")
    p.add_argument("--rates-fps", "--rates", dest="rates_fps", default="1:100:11")
    p.add_argument("--rails", type=int, default=3, help="evenly spaced rails for profile checks")
    p.add_argument("--repeats", type=int, default=3, help="timing repeats (best counts)")
    p.add_argument("--seed", type=int, default=0, help="first random-suite seed")
    p.add_argument("--count", type=int, default=100, help="random-suite size")
    p.add_argument("--cap", type=int, default=DEFAULT_LABEL_CAP, help="oracle label cap")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--transition-energy-nj", type=Fraction, default=None)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InfeasibleError as exc:
        _stderr(f"error: {exc}")
        if exc.min_latency:
            _stderr(
                f"hint: the fastest schedule takes {exc.min_latency} ps; "
                f"the highest feasible rate is {float(max_feasible_rate(exc.min_latency)):.3f} FPS"
            )
        return EXIT_INFEASIBLE
    except OracleCapacityError as exc:
        _stderr(f"error: {exc}")
        return EXIT_CAPACITY
    except (PowerFlowError, ValueError, OSError, ZeroDivisionError) as exc:
        _stderr(f"error: {exc}")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
