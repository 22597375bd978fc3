"""Customer-to-depot assignment under depot capacities.

Solved as a transportation problem by successive shortest paths: each
customer is one unit of supply, each depot a sink with its capacity, and
every augmentation follows a cheapest path in the residual network under
Johnson potentials so Dijkstra applies.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from ..model import ReevrpError


class InsufficientCapacity(ReevrpError):
    pass


@dataclass(frozen=True)
class DepotAssignment:
    depot_of: tuple  # depot index per customer
    objective: int

    def per_depot(self, n_depots: int) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(n_depots)]
        for c, k in enumerate(self.depot_of):
            out[k].append(c)
        return out


class _MinCostFlow:
    def __init__(self, n: int):
        self.n = n
        self.graph: list[list[list[int]]] = [[] for _ in range(n)]

    def add_edge(self, u: int, v: int, cap: int, cost: int) -> None:
        self.graph[u].append([v, cap, cost, len(self.graph[v])])
        self.graph[v].append([u, 0, -cost, len(self.graph[u]) - 1])

    def flow(self, s: int, t: int, amount: int) -> tuple[int, int]:
        n = self.n
        potential = [0] * n
        total_cost = 0
        flow = 0
        while flow < amount:
            dist = [None] * n
            dist[s] = 0
            prev = [None] * n
            heap = [(0, s)]
            while heap:
                d, u = heapq.heappop(heap)
                if d != dist[u]:
                    continue
                for ei, (v, cap, cost, _) in enumerate(self.graph[u]):
                    if cap <= 0:
                        continue
                    nd = d + cost + potential[u] - potential[v]
                    if dist[v] is None or nd < dist[v]:
                        dist[v] = nd
                        prev[v] = (u, ei)
                        heapq.heappush(heap, (nd, v))
            if dist[t] is None:
                break
            for v in range(n):
                if dist[v] is not None:
                    potential[v] += dist[v]
            push = amount - flow
            v = t
            while v != s:
                u, ei = prev[v]
                push = min(push, self.graph[u][ei][1])
                v = u
            v = t
            while v != s:
                u, ei = prev[v]
                edge = self.graph[u][ei]
                edge[1] -= push
                self.graph[v][edge[3]][1] += push
                total_cost += push * edge[2]
                v = u
            flow += push
        return flow, total_cost


def assign_depots(cost, capacities) -> DepotAssignment:
    """Minimum total cost assignment of customers to capacitated depots.

    ``cost[c][k]`` is the integer out-and-back travel time between customer
    ``c`` and depot ``k``.
    """
    C = np.asarray(cost, dtype=np.int64)
    caps = [int(x) for x in capacities]
    n_c, n_d = C.shape if C.ndim == 2 else (0, len(caps))
    if len(caps) != n_d:
        raise ValueError("one capacity per depot is required")
    if any(x < 0 for x in caps):
        raise ValueError("capacities must be nonnegative")
    if sum(caps) < n_c:
        raise InsufficientCapacity(f"{n_c} customers but total depot capacity {sum(caps)}")
    s, t = n_c + n_d, n_c + n_d + 1
    mcf = _MinCostFlow(n_c + n_d + 2)
    for c in range(n_c):
        mcf.add_edge(s, c, 1, 0)
        for k in range(n_d):
            mcf.add_edge(c, n_c + k, 1, int(C[c, k]))
    for k in range(n_d):
        mcf.add_edge(n_c + k, t, caps[k], 0)
    flow, total = mcf.flow(s, t, n_c)
    if flow < n_c:
        raise InsufficientCapacity("not every customer could be assigned")
    depot_of = []
    for c in range(n_c):
        for v, cap, _, _ in mcf.graph[c]:
            if n_c <= v < n_c + n_d and cap == 0:
                depot_of.append(v - n_c)
                break
    return DepotAssignment(tuple(depot_of), int(total))


def out_and_back_times(times: np.ndarray, customers, depots) -> np.ndarray:
    """Round-trip times from a node-to-node time matrix."""
    T = np.asarray(times, dtype=np.int64)
    cu, de = np.asarray(customers), np.asarray(depots)
    return T[np.ix_(cu, de)] + T[np.ix_(de, cu)].T
