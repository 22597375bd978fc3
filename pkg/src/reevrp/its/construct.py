"""Randomized sequential insertion with a restricted candidate list."""
from __future__ import annotations

import numpy as np

from ..model import Instance, MeritParams, ReevrpError, Solution
from . import kernels
from .params import ItsParams
from .state import SearchState


class NoFeasibleSolutionFound(ReevrpError):
    """Raised when a search ends without a feasible incumbent.

    ``solution`` carries the best (infeasible) solution for diagnosis, if any.
    """

    def __init__(self, message: str, solution: Solution | None = None):
        super().__init__(message)
        self.solution = solution


def insert_customers(st: SearchState, unrouted, rcl: int, rng: np.random.Generator) -> None:
    """Route every customer in ``unrouted`` into ``st``.

    Empty routes are opened while vehicles remain (hybrids first) and filled
    from the candidate list; customers that fit nowhere go to the existing
    route minimizing a randomly weighted mix of cost and violations.
    """
    pending = sorted(int(u) for u in unrouted)
    while pending and st.n_slots > st.n_routes:
        r = st.n_routes
        w = rng.random(3)
        opened = False
        while pending:
            pos, score = kernels.insertion_scores(st, r, pending, float(w[0]), float(w[1]), float(w[2]))
            feasible = [(score[k], pending[k], pos[k]) for k in range(len(pending)) if pos[k] >= 0]
            if not feasible:
                break
            feasible.sort()
            candidates = feasible[:rcl]
            _, u, g = candidates[int(rng.integers(len(candidates)))]
            opened = True
            st.insert_customer(r, g, u)
            pending.remove(u)
        if not opened:
            break
    for u in list(pending):
        w = rng.random(3)
        choice = kernels.leftover_choice(st, u, float(w[0]), float(w[1]), float(w[2]), st.n_routes == 0)
        if choice is None:
            raise NoFeasibleSolutionFound("no vehicle available to serve the customers")
        st.insert_customer(choice[0], choice[1], u)
        pending.remove(u)
    st.reassign_types()


def construct_state(inst: Instance, params: ItsParams, rng: np.random.Generator,
                    merit_params: MeritParams | None = None) -> SearchState:
    st = SearchState(inst, merit_params or MeritParams.default(inst))
    insert_customers(st, inst.customers, params.rcl, rng)
    return st


def construct_solution(inst: Instance, params: ItsParams, rng: np.random.Generator) -> Solution:
    """A solution covering every customer once within the fleet limits.

    Routes may exceed capacity or duration; the merit function prices that.
    """
    return construct_state(inst, params, rng).to_solution()
