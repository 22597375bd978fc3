"""Iterated tabu search for large instances."""
from .construct import NoFeasibleSolutionFound, construct_solution
from .params import ItsParams
from .solver import SearchTrace, perturb_solution, solve_its, tabu_search
from .tabu import TabuList

__all__ = [
    "ItsParams",
    "NoFeasibleSolutionFound",
    "SearchTrace",
    "TabuList",
    "construct_solution",
    "perturb_solution",
    "solve_its",
    "tabu_search",
]
