"""REEVRP data model: instances, routes, solutions, costs and feasibility.

All quantities are integers:

* distances in centimiles (1/100 mile),
* durations in seconds,
* per-mile rates in micro-USD per mile,
* money in *cost units* of 1e-8 USD, i.e. ``rate [uUSD/mile] * distance [cmi]``.

Keeping money in cost units makes every cost, merit and column coefficient an
exact integer; documents round to micro-USD only on output.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

COST_UNITS_PER_USD = 10**8
COST_UNITS_PER_MICRO_USD = 100
SECONDS_PER_HOUR = 3600
CENTIMILES_PER_MILE = 100


class ReevrpError(Exception):
    """Base class for solver errors."""


class InvalidInstance(ReevrpError):
    pass


class BevRangeExceeded(ReevrpError):
    pass


class InfeasibleSolution(ReevrpError):
    pass


class VehicleType(enum.IntEnum):
    HYBRID = 0
    CONVENTIONAL = 1

    @property
    def code(self) -> str:
        return "H" if self is VehicleType.HYBRID else "C"

    @classmethod
    def from_code(cls, code: str) -> "VehicleType":
        try:
            return {"H": cls.HYBRID, "C": cls.CONVENTIONAL}[code]
        except KeyError:
            raise ValueError(f"unknown vehicle type code {code!r}") from None


class Subtype(enum.IntEnum):
    """Extended vehicle types used by the set-partitioning model."""

    E = 0  # hybrid, all-electric (distance <= EV range)
    G = 1  # hybrid, extender engaged (distance > EV range)
    C = 2  # conventional

    @property
    def vehicle_type(self) -> VehicleType:
        return VehicleType.CONVENTIONAL if self is Subtype.C else VehicleType.HYBRID


@dataclass(frozen=True)
class FleetParams:
    m_hybrid: int
    m_conventional: int
    capacity: int
    max_duration: int  # seconds
    ev_range: int  # centimiles

    def __post_init__(self):
        if self.capacity <= 0 or self.max_duration <= 0:
            raise InvalidInstance("capacity and max_duration must be positive")
        if self.m_hybrid < 0 or self.m_conventional < 0:
            raise InvalidInstance("fleet counts must be nonnegative")
        if self.ev_range < 0:
            raise InvalidInstance("ev_range must be nonnegative")

    def available(self, vtype: VehicleType) -> int:
        return self.m_hybrid if vtype is VehicleType.HYBRID else self.m_conventional


@dataclass(frozen=True)
class CostModel:
    c_e: int  # micro-USD per mile, EV mode
    c_g: int  # micro-USD per mile, range-extender mode
    c_0: int  # micro-USD per mile, conventional vehicle
    bev_mode: bool = False

    def __post_init__(self):
        if not (0 <= self.c_e < self.c_g <= self.c_0):
            raise InvalidInstance(
                f"cost ordering c_e < c_g <= c_0 violated: {self.c_e}, {self.c_g}, {self.c_0}"
            )


def route_cost(distance: int, vtype: VehicleType, cost: CostModel, ev_range: int) -> int:
    """Cost of driving ``distance`` centimiles with a vehicle of ``vtype``.

    Returns cost units (1e-8 USD). A hybrid pays the EV rate up to the EV range
    and the extender rate beyond it; a conventional vehicle pays ``c_0`` per mile.
    """
    if vtype is VehicleType.CONVENTIONAL:
        return cost.c_0 * distance
    if distance <= ev_range:
        return cost.c_e * distance
    if cost.bev_mode:
        raise BevRangeExceeded(f"distance {distance} exceeds BEV range {ev_range}")
    return cost.c_e * ev_range + cost.c_g * (distance - ev_range)


@dataclass(frozen=True, eq=False)
class Instance:
    """A depot-level routing instance on nodes 0..n+1 (0 and n+1 are the depot)."""

    n: int
    demand: np.ndarray
    service_time: np.ndarray
    dist: np.ndarray
    time: np.ndarray
    fleet: FleetParams
    cost: CostModel

    def __post_init__(self):
        size = self.n + 2
        for name in ("demand", "service_time"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.int64)
            if arr.shape != (size,):
                raise InvalidInstance(f"{name} must have length n+2={size}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        for name in ("dist", "time"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.int64)
            if arr.shape != (size, size):
                raise InvalidInstance(f"{name} must be (n+2)x(n+2)")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.n < 0:
            raise InvalidInstance("n must be nonnegative")
        if self.demand[0] or self.demand[-1] or self.service_time[0] or self.service_time[-1]:
            raise InvalidInstance("depot nodes must have zero demand and service time")
        if self.n and (self.demand[1:-1] <= 0).any():
            raise InvalidInstance("customer demands must be positive")
        if (self.service_time < 0).any():
            raise InvalidInstance("service times must be nonnegative")
        off = ~np.eye(size, dtype=bool)
        off[0, size - 1] = off[size - 1, 0] = False
        if (self.dist[off] <= 0).any() or (self.time[off] <= 0).any():
            raise InvalidInstance("off-diagonal distances and times must be positive")

    @property
    def sink(self) -> int:
        return self.n + 1

    @property
    def customers(self) -> range:
        return range(1, self.n + 1)

    def with_fleet(self, **changes) -> "Instance":
        fleet = FleetParams(**{**self.fleet.__dict__, **changes})
        return Instance(self.n, self.demand, self.service_time, self.dist, self.time, fleet, self.cost)

    def with_cost(self, **changes) -> "Instance":
        cost = CostModel(**{**self.cost.__dict__, **changes})
        return Instance(self.n, self.demand, self.service_time, self.dist, self.time, self.fleet, cost)

    def mean_distance(self) -> float:
        size = self.n + 2
        if size <= 2:
            return float(self.dist[0, -1]) if size == 2 else 0.0
        off = ~np.eye(size, dtype=bool)
        return float(self.dist[off].mean())


def triangle_violations(dist: np.ndarray, limit: int | None = None) -> list[tuple[int, int, int]]:
    """Triples (i, j, k) with d_ij + d_jk < d_ik; the depot copy n+1 is skipped as a midpoint."""
    d = np.asarray(dist, dtype=np.int64)
    size = d.shape[0]
    found = []
    for j in range(size):
        if j in (0, size - 1) and size > 2:
            continue
        via = d[:, j][:, None] + d[j, :][None, :]
        bad = np.argwhere(via < d)
        for i, k in bad:
            if i != k and i != j and k != j:
                found.append((int(i), j, int(k)))
                if limit is not None and len(found) >= limit:
                    return found
    return found


@dataclass(frozen=True)
class RouteStats:
    load: int
    distance: int
    duration: int
    ev_overflow: int


def route_stats(nodes: Sequence[int], inst: Instance) -> RouteStats:
    """Recompute stats of a full node sequence (depots included) from scratch."""
    nodes = list(nodes)
    load = int(sum(int(inst.demand[v]) for v in nodes))
    dist = 0
    dur = 0
    for a, b in zip(nodes, nodes[1:]):
        dist += int(inst.dist[a, b])
        dur += int(inst.time[a, b]) + int(inst.service_time[a])
    return RouteStats(load, dist, dur, max(dist - inst.fleet.ev_range, 0))


@dataclass(frozen=True)
class Route:
    """A route 0 -> customers -> n+1; ``customers`` excludes the depots."""

    customers: tuple[int, ...]
    stats: RouteStats

    @classmethod
    def build(cls, customers: Iterable[int], inst: Instance) -> "Route":
        customers = tuple(int(c) for c in customers)
        if not customers:
            raise ValueError("a route must visit at least one customer")
        return cls(customers, route_stats((0, *customers, inst.sink), inst))

    def nodes(self, inst: Instance) -> tuple[int, ...]:
        return (0, *self.customers, inst.sink)


@dataclass(frozen=True)
class Solution:
    routes: tuple[Route, ...]
    types: tuple[VehicleType, ...]

    def __post_init__(self):
        if len(self.routes) != len(self.types):
            raise ValueError("routes and types must have equal length")

    @classmethod
    def build(cls, routes: Iterable[Sequence[int]], types: Iterable[VehicleType], inst: Instance) -> "Solution":
        return cls(tuple(Route.build(r, inst) for r in routes), tuple(VehicleType(t) for t in types))

    def type_counts(self) -> dict[VehicleType, int]:
        counts = {VehicleType.HYBRID: 0, VehicleType.CONVENTIONAL: 0}
        for t in self.types:
            counts[t] += 1
        return counts

    def canonical(self) -> tuple[tuple[tuple[int, ...], int], ...]:
        """Routes sorted by first customer, each paired with its type."""
        pairs = [(r.customers, int(t)) for r, t in zip(self.routes, self.types)]
        return tuple(sorted(pairs, key=lambda p: p[0]))

    def fingerprint(self) -> int:
        from .fingerprint import solution_fingerprint

        return solution_fingerprint((r.customers, int(t)) for r, t in zip(self.routes, self.types))


def solution_cost(sol: Solution, inst: Instance) -> int:
    return sum(
        route_cost(r.stats.distance, t, inst.cost, inst.fleet.ev_range)
        for r, t in zip(sol.routes, sol.types)
    )


@dataclass
class RouteViolation:
    route: int
    repeated: list[int] = field(default_factory=list)
    foreign: list[int] = field(default_factory=list)
    capacity: int = 0
    duration: int = 0
    bev_range: int = 0

    def any(self) -> bool:
        return bool(self.repeated or self.foreign or self.capacity or self.duration or self.bev_range)


@dataclass
class FeasibilityReport:
    routes: list[RouteViolation]
    missing: list[int]
    duplicated: list[int]
    fleet_excess: dict[VehicleType, int]

    @property
    def feasible(self) -> bool:
        return not (
            self.missing
            or self.duplicated
            or any(self.fleet_excess.values())
            or any(v.any() for v in self.routes)
        )

    @property
    def partition_ok(self) -> bool:
        return not (self.missing or self.duplicated)

    def describe(self) -> list[str]:
        out = []
        if self.missing:
            out.append(f"customers not served: {self.missing}")
        if self.duplicated:
            out.append(f"customers served more than once: {self.duplicated}")
        for t, k in self.fleet_excess.items():
            if k:
                out.append(f"{t.name.lower()} fleet exceeded by {k}")
        for v in self.routes:
            if v.repeated:
                out.append(f"route {v.route} repeats {v.repeated}")
            if v.foreign:
                out.append(f"route {v.route} visits unknown nodes {v.foreign}")
            if v.capacity:
                out.append(f"route {v.route} over capacity by {v.capacity}")
            if v.duration:
                out.append(f"route {v.route} over duration by {v.duration} s")
            if v.bev_range:
                out.append(f"route {v.route} over battery range by {v.bev_range} cmi")
        return out


def check_feasibility(sol: Solution, inst: Instance) -> FeasibilityReport:
    """Per-route capacity, duration and BEV-range violations plus coverage and fleet-size violations."""
    Q, T, D_E = inst.fleet.capacity, inst.fleet.max_duration, inst.fleet.ev_range
    per_route = []
    seen: dict[int, int] = {}
    for f, (route, vtype) in enumerate(zip(sol.routes, sol.types)):
        v = RouteViolation(f)
        local: dict[int, int] = {}
        for c in route.customers:
            if not 1 <= c <= inst.n:
                v.foreign.append(c)
                continue
            local[c] = local.get(c, 0) + 1
            seen[c] = seen.get(c, 0) + 1
        v.repeated = sorted(c for c, k in local.items() if k > 1)
        v.capacity = max(route.stats.load - Q, 0)
        v.duration = max(route.stats.duration - T, 0)
        if inst.cost.bev_mode and vtype is VehicleType.HYBRID:
            v.bev_range = max(route.stats.distance - D_E, 0)
        per_route.append(v)
    missing = [c for c in inst.customers if c not in seen]
    duplicated = sorted(c for c, k in seen.items() if k > 1)
    counts = sol.type_counts()
    excess = {t: max(counts[t] - inst.fleet.available(t), 0) for t in VehicleType}
    return FeasibilityReport(per_route, missing, duplicated, excess)


@dataclass(frozen=True)
class MeritParams:
    phi_q: int  # cost units per package over capacity
    phi_t: int  # cost units per second over the duration limit

    def __post_init__(self):
        if self.phi_q <= 0 or self.phi_t <= 0:
            raise ValueError("penalty weights must be positive")

    @classmethod
    def default(cls, inst: Instance) -> "MeritParams":
        # 10^4 * c_0 * mean distance, per package and per hour
        base = 10**4 * inst.cost.c_0 * max(int(round(inst.mean_distance())), 1)
        return cls(phi_q=base, phi_t=max(base // SECONDS_PER_HOUR, 1))


def bev_penalty_rate(inst: Instance, params: MeritParams) -> int:
    """Per-centimile price of extender miles when the hybrid fleet is pure BEV."""
    return max(params.phi_q, inst.cost.c_0 + 1)


def penalized_route_cost(distance: int, vtype: VehicleType, inst: Instance, params: MeritParams) -> int:
    """Route cost where BEV range overflow is priced instead of raising."""
    if inst.cost.bev_mode and vtype is VehicleType.HYBRID and distance > inst.fleet.ev_range:
        D_E = inst.fleet.ev_range
        return inst.cost.c_e * D_E + bev_penalty_rate(inst, params) * (distance - D_E)
    return route_cost(distance, vtype, inst.cost, inst.fleet.ev_range)


def merit(sol: Solution, inst: Instance, params: MeritParams) -> int:
    """Cost plus weighted capacity and duration violations."""
    Q, T = inst.fleet.capacity, inst.fleet.max_duration
    total = 0
    for r, t in zip(sol.routes, sol.types):
        s = r.stats
        total += penalized_route_cost(s.distance, t, inst, params)
        total += params.phi_q * max(s.load - Q, 0) + params.phi_t * max(s.duration - T, 0)
    return total


@dataclass(frozen=True)
class MetricsRecord:
    cost: int  # cost units
    vmt: int  # centimiles
    vht: int  # seconds
    ev_miles: int
    extender_miles: int
    cv_miles: int
    n_hybrid: int
    n_conventional: int
    packages: int
    capacity_utilization: float

    @property
    def cost_usd(self) -> float:
        return self.cost / COST_UNITS_PER_USD

    @property
    def vehicles(self) -> int:
        return self.n_hybrid + self.n_conventional


def metrics(sol: Solution, inst: Instance) -> MetricsRecord:
    report = check_feasibility(sol, inst)
    if not report.feasible:
        raise InfeasibleSolution("metrics require a feasible solution")
    D_E = inst.fleet.ev_range
    ev = ext = cv = vmt = vht = load = 0
    for r, t in zip(sol.routes, sol.types):
        d = r.stats.distance
        vmt += d
        vht += r.stats.duration
        load += r.stats.load
        if t is VehicleType.HYBRID:
            ev += min(d, D_E)
            ext += max(d - D_E, 0)
        else:
            cv += d
    counts = sol.type_counts()
    F = len(sol.routes)
    util = load / (F * inst.fleet.capacity) if F else 0.0
    return MetricsRecord(
        cost=solution_cost(sol, inst),
        vmt=vmt,
        vht=vht,
        ev_miles=ev,
        extender_miles=ext,
        cv_miles=cv,
        n_hybrid=counts[VehicleType.HYBRID],
        n_conventional=counts[VehicleType.CONVENTIONAL],
        packages=load,
        capacity_utilization=util,
    )


# -- documents ---------------------------------------------------------------


def instance_to_dict(inst: Instance) -> dict:
    return {
        "n": inst.n,
        "demand": inst.demand.tolist(),
        "service_time_s": inst.service_time.tolist(),
        "dist_centimiles": inst.dist.ravel().tolist(),
        "time_s": inst.time.ravel().tolist(),
        "fleet": {
            "m_hybrid": inst.fleet.m_hybrid,
            "m_conventional": inst.fleet.m_conventional,
            "capacity": inst.fleet.capacity,
            "max_duration_s": inst.fleet.max_duration,
            "ev_range_centimiles": inst.fleet.ev_range,
        },
        "cost": {
            "c_e_micro_usd": inst.cost.c_e,
            "c_g_micro_usd": inst.cost.c_g,
            "c_0_micro_usd": inst.cost.c_0,
            "bev_mode": inst.cost.bev_mode,
        },
    }


def instance_from_dict(doc: dict) -> Instance:
    try:
        n = int(doc["n"])
        size = n + 2
        fleet = doc["fleet"]
        cost = doc["cost"]
        return Instance(
            n=n,
            demand=np.array(doc["demand"], dtype=np.int64),
            service_time=np.array(doc["service_time_s"], dtype=np.int64),
            dist=np.array(doc["dist_centimiles"], dtype=np.int64).reshape(size, size),
            time=np.array(doc["time_s"], dtype=np.int64).reshape(size, size),
            fleet=FleetParams(
                m_hybrid=int(fleet["m_hybrid"]),
                m_conventional=int(fleet["m_conventional"]),
                capacity=int(fleet["capacity"]),
                max_duration=int(fleet["max_duration_s"]),
                ev_range=int(fleet["ev_range_centimiles"]),
            ),
            cost=CostModel(
                c_e=int(cost["c_e_micro_usd"]),
                c_g=int(cost["c_g_micro_usd"]),
                c_0=int(cost["c_0_micro_usd"]),
                bev_mode=bool(cost.get("bev_mode", False)),
            ),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InvalidInstance):
            raise
        raise InvalidInstance(f"malformed instance document: {exc}") from exc


def dumps_instance(inst: Instance) -> str:
    return json.dumps(instance_to_dict(inst), separators=(",", ":"))


def load_instance(path: str | Path) -> Instance:
    with open(path, encoding="utf-8") as fh:
        return instance_from_dict(json.load(fh))


def save_instance(inst: Instance, path: str | Path) -> None:
    Path(path).write_text(dumps_instance(inst), encoding="utf-8")


def micro_usd(cost_units: int) -> int:
    """Round cost units to whole micro-USD (half away from zero)."""
    q, r = divmod(abs(cost_units), COST_UNITS_PER_MICRO_USD)
    if 2 * r >= COST_UNITS_PER_MICRO_USD:
        q += 1
    return q if cost_units >= 0 else -q


def format_usd(cost_units: int) -> str:
    m = micro_usd(cost_units)
    sign = "-" if m < 0 else ""
    whole, frac = divmod(abs(m), 10**6)
    return f"{sign}{whole}.{frac:06d}"


def solution_to_dict(sol: Solution, inst: Instance, **extra) -> dict:
    doc = {
        "routes": [list(r.customers) for r in sol.routes],
        "types": [t.code for t in sol.types],
        "objective_micro_usd": micro_usd(solution_cost(sol, inst)),
    }
    doc.update(extra)
    return doc


def solution_from_dict(doc: dict, inst: Instance) -> Solution:
    try:
        routes, codes = doc["routes"], doc["types"]
        for r in routes:
            for v in r:
                if isinstance(v, bool) or not isinstance(v, int) or not 1 <= v <= inst.n:
                    raise InvalidInstance(f"solution refers to {v!r}, which is not a customer")
        return Solution.build(routes, [VehicleType.from_code(t) for t in codes], inst)
    except (KeyError, TypeError) as exc:
        raise InvalidInstance(f"malformed solution document: {exc}") from exc
