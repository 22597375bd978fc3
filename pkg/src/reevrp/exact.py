"""Exact machinery for small instances.

Route enumeration by labeling, an optimal set-partitioning dynamic program
with fleet limits, and the mappings between (routes, vehicle types) solutions
and column assignments over the extended subtypes E, G and C.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    Instance,
    ReevrpError,
    Route,
    Solution,
    Subtype,
    VehicleType,
    check_feasibility,
)

DEFAULT_MAX_N = 12
_INF = 1 << 60


class InstanceTooLarge(ReevrpError):
    pass


class Infeasible(ReevrpError):
    pass


class InvalidColumns(ReevrpError):
    pass


class InfeasibleInput(ReevrpError):
    pass


def column_cost(distance: int, subtype: Subtype, inst: Instance) -> int:
    """Objective coefficient of a route column for one subtype."""
    c = inst.cost
    if subtype is Subtype.E:
        return c.c_e * distance
    if subtype is Subtype.G:
        return c.c_g * distance - (c.c_g - c.c_e) * inst.fleet.ev_range
    return c.c_0 * distance


def valid_subtypes(distance: int, inst: Instance) -> tuple[Subtype, ...]:
    out = []
    if distance <= inst.fleet.ev_range:
        out.append(Subtype.E)
    elif not inst.cost.bev_mode:
        out.append(Subtype.G)
    out.append(Subtype.C)
    return tuple(out)


def customer_mask(customers) -> int:
    m = 0
    for v in customers:
        m |= 1 << (v - 1)
    return m


@dataclass(frozen=True)
class EnumeratedRoute:
    route: Route
    cost_by_subtype: dict
    customer_set: int

    @classmethod
    def from_route(cls, route: Route, inst: Instance) -> "EnumeratedRoute":
        d = route.stats.distance
        costs = {k: column_cost(d, k, inst) for k in valid_subtypes(d, inst)}
        return cls(route, costs, customer_mask(route.customers))


@dataclass(frozen=True)
class ColumnSolution:
    """Selected columns, each with an implicit weight of one."""

    assignments: tuple[tuple[EnumeratedRoute, Subtype], ...]

    def objective(self, inst: Instance) -> int:
        return sum(column_cost(er.route.stats.distance, k, inst) for er, k in self.assignments)

    def validate(self, inst: Instance) -> None:
        """Raise ``InvalidColumns`` unless every set-partitioning constraint holds."""
        covered = 0
        hybrid = conventional = 0
        DE = inst.fleet.ev_range
        for er, k in self.assignments:
            d = er.route.stats.distance
            if k is Subtype.E and d > DE:
                raise InvalidColumns(f"subtype E on route of distance {d} > {DE}")
            if k is Subtype.G and d <= DE:
                raise InvalidColumns(f"subtype G on route of distance {d} <= {DE}")
            if k is Subtype.G and inst.cost.bev_mode:
                raise InvalidColumns("subtype G is unavailable in BEV mode")
            if er.customer_set & covered:
                raise InvalidColumns("a customer is covered twice")
            covered |= er.customer_set
            if k is Subtype.C:
                conventional += 1
            else:
                hybrid += 1
        if covered != (1 << inst.n) - 1:
            raise InvalidColumns("customers are not all covered")
        if hybrid > inst.fleet.m_hybrid or conventional > inst.fleet.m_conventional:
            raise InvalidColumns("fleet limits exceeded")


def map_to_columns(sol: Solution, inst: Instance) -> ColumnSolution:
    if not check_feasibility(sol, inst).feasible:
        raise InfeasibleInput("solution is not feasible")
    out = []
    for route, t in zip(sol.routes, sol.types):
        er = EnumeratedRoute.from_route(route, inst)
        if t is VehicleType.CONVENTIONAL:
            k = Subtype.C
        elif route.stats.distance <= inst.fleet.ev_range:
            k = Subtype.E
        else:
            k = Subtype.G
        out.append((er, k))
    return ColumnSolution(tuple(out))


def map_from_columns(cols: ColumnSolution, inst: Instance) -> Solution:
    cols.validate(inst)
    return Solution(
        tuple(er.route for er, _ in cols.assignments),
        tuple(k.vehicle_type for _, k in cols.assignments),
    )


# -- enumeration --------------------------------------------------------------

def _check_size(inst: Instance, max_n: int) -> None:
    if inst.n > max_n:
        raise InstanceTooLarge(f"n={inst.n} exceeds the limit of {max_n}")


def _labels(inst: Instance, dominance: bool):
    """Yield (customers, distance) for every feasible elementary route.

    Labels carry the visited set, load, elapsed time including service and
    distance. With ``dominance`` only labels not dominated in (time, distance)
    by another label with the same visited set and terminal are extended.
    """
    n, sink = inst.n, inst.sink
    D, Tm, q, s = inst.dist.tolist(), inst.time.tolist(), inst.demand.tolist(), inst.service_time.tolist()
    Q, T = inst.fleet.capacity, inst.fleet.max_duration
    level = []
    for j in range(1, n + 1):
        t = Tm[0][j] + s[j]
        if q[j] <= Q and t <= T:
            level.append(((j,), 1 << (j - 1), q[j], t, D[0][j]))
    while level:
        if dominance:
            level = _pareto(level)
        nxt = []
        for path, mask, load, t, d in level:
            v = path[-1]
            if t + Tm[v][sink] <= T:
                yield path, d + D[v][sink]
            for j in range(1, n + 1):
                bit = 1 << (j - 1)
                if mask & bit or load + q[j] > Q:
                    continue
                tj = t + Tm[v][j] + s[j]
                if tj <= T:
                    nxt.append((path + (j,), mask | bit, load + q[j], tj, d + D[v][j]))
        level = nxt


def _pareto(level):
    groups: dict = {}
    for lab in level:
        groups.setdefault((lab[1], lab[0][-1]), []).append(lab)
    out = []
    for key in sorted(groups):
        labs = sorted(groups[key], key=lambda x: (x[3], x[4], x[0]))
        best_d = None
        for lab in labs:
            if best_d is None or lab[4] < best_d:
                out.append(lab)
                best_d = lab[4]
    return out


def enumerate_routes(inst: Instance, max_n: int = DEFAULT_MAX_N, dominance: bool = False) -> list[EnumeratedRoute]:
    """All routes meeting elementarity, capacity and duration limits.

    With ``dominance`` the result keeps, per visited set and terminal, only
    routes whose partial paths were Pareto-optimal in time and distance; the
    minimum distance per customer set is preserved.
    """
    _check_size(inst, max_n)
    out = []
    for path, _ in _labels(inst, dominance):
        out.append(EnumeratedRoute.from_route(Route.build(path, inst), inst))
    return out


def best_route_per_set(inst: Instance, max_n: int = DEFAULT_MAX_N) -> dict[int, tuple[int, tuple[int, ...]]]:
    """Minimum-distance feasible ordering for every customer set that has one."""
    _check_size(inst, max_n)
    best: dict[int, tuple[int, tuple[int, ...]]] = {}
    for path, d in _labels(inst, dominance=True):
        m = customer_mask(path)
        cur = best.get(m)
        if cur is None or (d, path) < cur:
            best[m] = (d, path)
    return best


# -- set-partitioning dynamic program -----------------------------------------

def _hybrid_cost(d: int, inst: Instance) -> int | None:
    if d <= inst.fleet.ev_range:
        return inst.cost.c_e * d
    if inst.cost.bev_mode:
        return None
    return inst.cost.c_e * inst.fleet.ev_range + inst.cost.c_g * (d - inst.fleet.ev_range)


def solve_exact(inst: Instance, max_n: int = DEFAULT_MAX_N) -> tuple[Solution, int]:
    """Optimal solution and its cost in cost units.

    ``f[M][h, c]`` is the cheapest way to cover customer set ``M`` with exactly
    ``h`` hybrid and ``c`` conventional routes. Each transition removes the
    route containing the lowest customer of ``M``.
    """
    _check_size(inst, max_n)
    n = inst.n
    if n == 0:
        return Solution((), ()), 0
    H = min(inst.fleet.m_hybrid, n)
    C = min(inst.fleet.m_conventional, n)
    best = best_route_per_set(inst, max_n)
    hyb = {m: _hybrid_cost(d, inst) for m, (d, _) in best.items()}
    conv = {m: inst.cost.c_0 * d for m, (d, _) in best.items()}

    full = (1 << n) - 1
    f = np.full((full + 1, H + 1, C + 1), _INF, dtype=np.int64)
    f[0, 0, 0] = 0
    for M in range(1, full + 1):
        low = M & -M
        rest = M ^ low
        cur = f[M]
        sub = rest
        while True:
            S = sub | low
            if S in best:
                prev = f[M ^ S]
                h = hyb[S]
                if h is not None and H:
                    np.minimum(cur[1:, :], prev[:-1, :] + h, out=cur[1:, :])
                if C:
                    np.minimum(cur[:, 1:], prev[:, :-1] + conv[S], out=cur[:, 1:])
            if sub == 0:
                break
            sub = (sub - 1) & rest
        np.minimum(cur, _INF, out=cur)

    final = f[full]
    value = int(final.min())
    if value >= _INF:
        raise Infeasible("the fleet cannot serve every customer within the route limits")
    h, c = (int(x) for x in np.argwhere(final == value)[0])

    routes, types = [], []
    M = full
    while M:
        low = M & -M
        rest = M ^ low
        sub = rest
        while True:
            S = sub | low
            if S in best:
                prev = f[M ^ S]
                target = int(f[M, h, c])
                if h and hyb[S] is not None and int(prev[h - 1, c]) + hyb[S] == target:
                    h -= 1
                    types.append(VehicleType.HYBRID)
                    break
                if c and int(prev[h, c - 1]) + conv[S] == target:
                    c -= 1
                    types.append(VehicleType.CONVENTIONAL)
                    break
            if sub == 0:
                raise AssertionError("reconstruction failed")
            sub = (sub - 1) & rest
        routes.append(best[S][1])
        M ^= S
    return Solution.build(routes, types, inst), value

