"""Route-removal perturbation."""
from __future__ import annotations

import numpy as np

from .state import SearchState


def proximity(st: SearchState, r: int) -> list[int]:
    """Largest distance from a customer of route r to a customer of each route."""
    mine = st.seq[r, 1 : int(st.lens[r]) - 1]
    reach = st.D[mine].max(axis=0)
    out = []
    for other in range(st.n_routes):
        nodes = st.seq[other, 1 : int(st.lens[other]) - 1]
        out.append(int(reach[nodes].max()))
    return out


def worst_route(st: SearchState) -> int:
    """Route with the highest cost per package (lowest index on ties)."""
    best, best_cost, best_load = 0, None, 1
    for r in range(st.n_routes):
        c = st.route_cost(int(st.dist[r]), int(st.vtype[r]))
        ld = int(st.load[r])
        if best_cost is None or c * best_load > best_cost * ld:
            best, best_cost, best_load = r, c, ld
    return best


def removal_set(st: SearchState, threshold: int) -> list[int]:
    r = worst_route(st)
    if st.n_routes == 1:
        return [r]
    delta = proximity(st, r)
    close = [o for o in range(st.n_routes) if o != r and delta[o] < threshold]
    if not close:
        others = [o for o in range(st.n_routes) if o != r]
        close = [min(others, key=lambda o: (delta[o], o))]
    return sorted([r, *close])


def perturb_state(st: SearchState, threshold: int, rcl: int, rng: np.random.Generator) -> list[int]:
    """Remove the worst route and its neighbours, then reinsert their customers."""
    from .construct import insert_customers

    if st.n_routes == 0:
        return []
    slots = removal_set(st, threshold)
    freed = st.remove_routes(slots)
    insert_customers(st, freed, rcl, rng)
    return slots
