"""Outer-loop rail selection: enumerate rail subsets and solve each one."""

from __future__ import annotations

import itertools
from typing import Callable, Sequence

from .errors import InfeasibleError
from .model import DeadlineSpec, RailSet, TransitionModel, VoltageMenu, WorkloadProfile, div_round_half_up
from .oracle import solve_oracle
from .solver import Schedule, SolveReport, marginal_utility_jump_search, solve_lambda_search
from .statespace import LayeredStateGraph, StateCatalog

SOLVERS: dict[str, Callable[[LayeredStateGraph, DeadlineSpec], tuple[Schedule, SolveReport]]] = {
    "lambda": solve_lambda_search,
    "jump": marginal_utility_jump_search,
    "oracle": solve_oracle,
}


def enumerate_rail_sets(menu: Sequence[int], n_max: int) -> list[RailSet]:
    """All rail subsets of size 1..n_max, by size and then lexicographically."""
    levels = sorted(set(menu))
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    n_max = min(n_max, len(levels))
    return [RailSet(c) for k in range(1, n_max + 1) for c in itertools.combinations(levels, k)]


def evenly_spaced_rails(menu: Sequence[int], n: int) -> RailSet:
    """``n`` levels spread across the menu; a single rail sits at the top level."""
    levels = sorted(set(menu))
    m = len(levels)
    if not 1 <= n <= m:
        raise ValueError(f"need 1 <= n <= {m} rails")
    if n == 1:
        return RailSet((levels[-1],))
    return RailSet(tuple(levels[div_round_half_up(k * (m - 1), n - 1)] for k in range(n)))


class RailExplorer:
    """Solves a workload under many rail subsets, sharing state enumeration and results.

    Per-subset results are cached by (rails, deadline, solver), so sweeps over
    ``n_max`` or between evenly spaced and optimized rails never re-solve.
    """

    def __init__(
        self,
        workload: WorkloadProfile,
        tm: TransitionModel | None = None,
        menu: VoltageMenu | None = None,
        prune: bool = True,
        catalog: StateCatalog | None = None,
    ):
        self.workload = workload
        self.tm = tm or TransitionModel()
        self.menu = menu or VoltageMenu()
        self.prune = prune
        if catalog is None or catalog.workload != workload or catalog.levels != self.menu.levels:
            catalog = StateCatalog(workload, self.menu.levels)
        self.catalog = catalog
        self._results: dict[tuple, tuple[Schedule, SolveReport] | None] = {}
        self._latency: dict[RailSet, int] = {}

    def min_latency(self, rail_set: RailSet) -> int:
        if rail_set not in self._latency:
            self._latency[rail_set] = self.catalog.max_rail_latency(rail_set, self.tm)
        return self._latency[rail_set]

    def graph(self, rail_set: RailSet) -> LayeredStateGraph:
        return self.catalog.graph(rail_set, self.tm, self.prune)

    def solve(
        self, rail_set: RailSet, deadline: DeadlineSpec, solver: str = "lambda"
    ) -> tuple[Schedule, SolveReport] | None:
        """Solve one rail subset; None when the subset cannot meet the deadline."""
        key = (rail_set, deadline, solver)
        if key not in self._results:
            result = None
            if self.min_latency(rail_set) <= deadline.t_max:
                try:
                    result = SOLVERS[solver](self.graph(rail_set), deadline)
                except InfeasibleError:
                    result = None
            self._results[key] = result
        return self._results[key]

    def optimize(
        self, deadline: DeadlineSpec, n_max: int, solver: str = "lambda"
    ) -> tuple[RailSet, Schedule]:
        """Cheapest subset; ties go to fewer rails, then the lexicographically lower set."""
        best = None
        for rs in enumerate_rail_sets(self.menu.levels, n_max):
            result = self.solve(rs, deadline, solver)
            if result is None:
                continue
            key = (result[0].e_tot, len(rs), rs.rails)
            if best is None or key < best[0]:
                best = (key, rs, result[0])
        if best is None:
            fastest = self.min_latency(RailSet((self.menu.v_max,)))
            raise InfeasibleError(
                f"infeasible for all rail sets: minimum latency {fastest} ps exceeds t_max {deadline.t_max} ps",
                min_latency=fastest,
            )
        return best[1], best[2]

    def evenly_spaced(self, deadline: DeadlineSpec, n: int, solver: str = "lambda") -> tuple[RailSet, Schedule]:
        rs = evenly_spaced_rails(self.menu.levels, n)
        result = self.solve(rs, deadline, solver)
        if result is None:
            raise InfeasibleError(
                f"infeasible with evenly spaced rails {rs}", min_latency=self.min_latency(rs)
            )
        return rs, result[0]


def optimize_rails(
    workload: WorkloadProfile,
    deadline: DeadlineSpec,
    n_max: int,
    solver: str = "lambda",
    tm: TransitionModel | None = None,
    menu: VoltageMenu | None = None,
    prune: bool = True,
) -> tuple[RailSet, Schedule]:
    return RailExplorer(workload, tm, menu, prune).optimize(deadline, n_max, solver)
