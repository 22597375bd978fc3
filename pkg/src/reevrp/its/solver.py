"""Iterated tabu search driver."""
from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field

import numpy as np

from ..model import Instance, MeritParams, Solution, check_feasibility, micro_usd
from .construct import NoFeasibleSolutionFound, construct_state
from .params import ItsParams, rng_for
from .perturb import perturb_state
from .state import SearchState
from .tabu import run_tabu_search


@dataclass
class SearchTrace:
    """Best merit after every tabu-search run (construction or perturbation)."""

    iterations: list[int] = field(default_factory=list)
    best_merit: list[int] = field(default_factory=list)
    feasible: list[bool] = field(default_factory=list)

    def record(self, iteration: int, merit: int, feasible: bool) -> None:
        self.iterations.append(iteration)
        self.best_merit.append(merit)
        self.feasible.append(feasible)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "best_merit_micro_usd", "feasible"])
        for it, m, f in zip(self.iterations, self.best_merit, self.feasible):
            w.writerow([it, micro_usd(m), int(f)])
        return buf.getvalue()

    def __eq__(self, other):
        return (
            isinstance(other, SearchTrace)
            and self.iterations == other.iterations
            and self.best_merit == other.best_merit
            and self.feasible == other.feasible
        )


def tabu_search(sol: Solution, inst: Instance, params: ItsParams, rng: np.random.Generator,
                merit_params: MeritParams | None = None) -> Solution:
    st = SearchState.from_solution(sol, inst, merit_params or MeritParams.default(inst))
    best, _ = run_tabu_search(st, params.tenure, params.maxiter, rng)
    return best


def perturb_solution(sol: Solution, inst: Instance, params: ItsParams, rng: np.random.Generator,
                     merit_params: MeritParams | None = None) -> Solution:
    st = SearchState.from_solution(sol, inst, merit_params or MeritParams.default(inst))
    perturb_state(st, params.perturb_threshold(inst), params.rcl, rng)
    return st.to_solution()


class _Incumbent:
    def __init__(self):
        self.sol: Solution | None = None
        self.merit: int | None = None
        self.feasible_sol: Solution | None = None
        self.feasible_merit: int | None = None

    def offer(self, sol: Solution, merit: int, feasible: bool) -> None:
        if self.merit is None or merit < self.merit:
            self.sol, self.merit = sol, merit
        if feasible and (self.feasible_merit is None or merit < self.feasible_merit):
            self.feasible_sol, self.feasible_merit = sol, merit


def solve_its(inst: Instance, params: ItsParams, merit_params: MeritParams | None = None,
              ) -> tuple[Solution, SearchTrace]:
    """Multi-start construction, tabu search and perturbation loop.

    Returns the best feasible solution found and the per-run trace; raises
    ``NoFeasibleSolutionFound`` (with the best infeasible solution attached)
    when nothing feasible was reached.
    """
    mp = merit_params or MeritParams.default(inst)
    rng = rng_for(params)
    threshold = params.perturb_threshold(inst)
    trace = SearchTrace()
    best = _Incumbent()
    if inst.n == 0:
        empty = Solution((), ())
        trace.record(0, 0, True)
        return empty, trace
    deadline = None if params.time_limit is None else time.monotonic() + params.time_limit
    runs = 0

    def done() -> bool:
        if params.max_iterations is not None and runs >= params.max_iterations:
            return True
        return deadline is not None and time.monotonic() > deadline

    def feasible(sol: Solution) -> bool:
        return check_feasibility(sol, inst).feasible

    def search(st: SearchState) -> tuple[Solution, int]:
        nonlocal runs
        aspiration = best.merit
        sol, merit = run_tabu_search(st, params.tenure, params.maxiter, rng, aspiration, deadline)
        runs += 1
        best.offer(sol, merit, feasible(sol))
        trace.record(runs, best.merit, best.feasible_sol is not None)
        return sol, merit

    while not done():
        st = construct_state(inst, params, rng, mp)
        sol, merit = search(st)
        ref_merit = merit
        counter = 0
        while counter < params.restart and not done():
            st = SearchState.from_solution(sol, inst, mp)
            perturb_state(st, threshold, params.rcl, rng)
            sol, merit = search(st)
            if merit < ref_merit:
                ref_merit = merit
                counter = 0
            else:
                counter += 1

    if best.feasible_sol is None:
        raise NoFeasibleSolutionFound("no feasible solution found", best.sol)
    return best.feasible_sol, trace
