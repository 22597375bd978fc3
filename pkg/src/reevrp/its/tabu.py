"""Tabu search over six relocate / exchange / 2-opt neighborhoods."""
from __future__ import annotations

import time
from collections import deque

import numpy as np

from ..model import Solution
from . import kernels
from .routeops import NEIGHBORHOODS
from .state import SearchState


class TabuList:
    """Fingerprints of recently visited solutions.

    A fingerprint added at iteration ``t`` is tabu at iterations
    ``t+1 .. t+tenure``.
    """

    def __init__(self, tenure: int):
        self.tenure = tenure
        self._entries: deque[tuple[int, int]] = deque()

    def add(self, fp: int, iteration: int) -> None:
        self._entries.append((int(fp), iteration))

    def _expire(self, iteration: int) -> None:
        while self._entries and iteration - self._entries[0][1] > self.tenure:
            self._entries.popleft()

    def active(self, iteration: int) -> list[int]:
        self._expire(iteration)
        return [fp for fp, t in self._entries if t < iteration]

    def is_tabu(self, fp: int, iteration: int) -> bool:
        return int(fp) in self.active(iteration)

    def __len__(self) -> int:
        return len(self._entries)


def run_tabu_search(st: SearchState, tenure: int, maxiter: int, rng: np.random.Generator,
                    aspiration: int | None = None, deadline: float | None = None,
                    on_move=None) -> tuple[Solution, int]:
    """Improve ``st`` in place; returns the best solution seen and its merit.

    Stops after ``maxiter`` consecutive iterations without a new best merit.
    ``aspiration`` is an external incumbent merit: tabu moves are allowed when
    they beat ``min(aspiration, local best)``.
    """
    tabu = TabuList(tenure)
    tabu.add(st.fp, 0)
    best_sol = st.to_solution()
    best_merit = st.merit
    stall = 0
    it = 0
    while stall < maxiter:
        if deadline is not None and time.monotonic() > deadline:
            break
        it += 1
        kind = NEIGHBORHOODS[int(rng.integers(len(NEIGHBORHOODS)))]
        floor = best_merit if aspiration is None else min(best_merit, aspiration)
        move = kernels.scan(st, kind, tabu.active(it), floor)
        if move is None:
            stall += 1
            continue
        st.apply_move(*move[:5])
        st.reassign_types()
        tabu.add(st.fp, it)
        if on_move is not None:
            on_move(st, move)
        if st.merit < best_merit:
            best_merit = st.merit
            best_sol = st.to_solution()
            stall = 0
        else:
            stall += 1
    return best_sol, best_merit
