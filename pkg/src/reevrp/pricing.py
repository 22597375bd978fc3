"""Pricing and cut separation for the set-partitioning formulation.

These pieces work on externally supplied duals and fractional column
solutions; no LP solver is involved. Money is in integer cost units
(1e-8 USD), distances in centimiles, fractional weights are ``Fraction``.

Robust-cut duals are attributed to arcs: a cut whose row coefficient for a
column is the number of traversals of arcs in some set adds its dual to each
of those arcs. The strengthening row ``sum (delta_r - D_E) lambda_rG >= 0``
becomes ``-sigma * d_ij`` on every arc and ``+sigma * D_E`` on arcs leaving
the depot, for subtype G only.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .model import COST_UNITS_PER_USD, Instance, ReevrpError, Route, Subtype

EXTENSION_CAP = 10**6


class InvalidDuals(ReevrpError):
    pass


# -- ng-sets ------------------------------------------------------------------

@dataclass(frozen=True)
class NgSets:
    """Per-customer neighbourhoods; ``sets[i]`` is a frozenset for customers 1..n."""

    sets: tuple
    size: int

    @classmethod
    def nearest(cls, inst: Instance, size: int = 8) -> "NgSets":
        """Each customer plus its nearest others by distance; ties go to the lower index."""
        if size < 1:
            raise ValueError("ng-set size must be at least 1")
        n = inst.n
        sets: list = [frozenset()]
        for i in range(1, n + 1):
            others = sorted((int(inst.dist[i, j]), j) for j in range(1, n + 1) if j != i)
            sets.append(frozenset([i] + [j for _, j in others[: size - 1]]))
        return cls(tuple(sets), size)

    @classmethod
    def full(cls, inst: Instance) -> "NgSets":
        everyone = frozenset(range(1, inst.n + 1))
        return cls((frozenset(),) + (everyone,) * inst.n, inst.n)

    def __getitem__(self, i: int) -> frozenset:
        return self.sets[i]


def is_ng_feasible(customers: Sequence[int], ng: NgSets) -> bool:
    """Whether a customer sequence respects the ng-elementarity condition."""
    forbidden: frozenset = frozenset()
    for v in customers:
        if v in forbidden:
            return False
        forbidden = (forbidden & ng[v]) | {v}
    return True


# -- duals --------------------------------------------------------------------

@dataclass(frozen=True)
class IpecCut:
    """Infeasible path row for the path ``0, *path, n+1``."""

    path: tuple


@dataclass(frozen=True)
class RciCut:
    """Rounded capacity row for customer set ``members``."""

    members: frozenset


@dataclass(frozen=True)
class StrengtheningCut:
    pass


@dataclass(frozen=True)
class DualValues:
    """Duals in cost units, except the strengthening dual in micro-USD per mile.

    ``pi`` is indexed by node (entries for the depots are ignored).
    """

    pi: tuple
    mu_h: int = 0
    mu_c: int = 0
    cuts: tuple = ()

    def __post_init__(self):
        if self.mu_h > 0 or self.mu_c > 0:
            raise InvalidDuals("fleet duals must be nonpositive")
        for cut, value in self.cuts:
            if isinstance(cut, StrengtheningCut):
                if value < 0:
                    raise InvalidDuals("the strengthening dual must be nonnegative")
            elif value > 0:
                raise InvalidDuals("duals of <= cuts must be nonpositive")

    @classmethod
    def zero(cls, n: int) -> "DualValues":
        return cls(tuple([0] * (n + 2)))


def _to_units(value, scale: int) -> int:
    return int((Decimal(str(value)) * scale).quantize(Decimal(1), rounding=ROUND_HALF_EVEN))


def duals_from_dict(doc: dict, n: int) -> DualValues:
    """Parse a dual document keyed by constraint id.

    Keys: ``degree:<i>``, ``fleet:hybrid``, ``fleet:conventional``,
    ``ipec:<v1>-<v2>-...``, ``rci:<i>,<j>,...`` and ``strengthening``. Values
    are decimal USD (USD per mile for ``strengthening``).
    """
    pi = [0] * (n + 2)
    mu_h = mu_c = 0
    cuts = []
    for key, value in doc.items():
        kind, _, arg = key.partition(":")
        if kind == "degree":
            i = int(arg)
            if not 1 <= i <= n:
                raise InvalidDuals(f"no customer {i}")
            pi[i] = _to_units(value, COST_UNITS_PER_USD)
        elif key == "fleet:hybrid":
            mu_h = _to_units(value, COST_UNITS_PER_USD)
        elif key == "fleet:conventional":
            mu_c = _to_units(value, COST_UNITS_PER_USD)
        elif kind == "ipec":
            cuts.append((IpecCut(tuple(int(v) for v in arg.split("-"))), _to_units(value, COST_UNITS_PER_USD)))
        elif kind == "rci":
            cuts.append((RciCut(frozenset(int(v) for v in arg.split(","))), _to_units(value, COST_UNITS_PER_USD)))
        elif key == "strengthening":
            cuts.append((StrengtheningCut(), _to_units(value, 10**6)))
        else:
            raise InvalidDuals(f"unknown constraint id {key!r}")
    return DualValues(tuple(pi), mu_h, mu_c, tuple(cuts))


# -- reduced costs ------------------------------------------------------------

def closure_arcs(nodes: Sequence[int]) -> set:
    """Arcs (v_i, v_j), i < j, of the transitive closure of a node sequence."""
    return {(nodes[a], nodes[b]) for a in range(len(nodes)) for b in range(a + 1, len(nodes)) if nodes[a] != nodes[b]}


def arc_reduced_costs(inst: Instance, subtype: Subtype, duals: DualValues) -> np.ndarray:
    """(n+2)x(n+2) matrix of arc reduced costs for one subtype."""
    n, sink = inst.n, inst.sink
    c = inst.cost
    rate = {Subtype.E: c.c_e, Subtype.G: c.c_g, Subtype.C: c.c_0}[subtype]
    D = inst.dist.astype(object)
    R = D * rate
    if subtype is Subtype.G:
        R[0, :] -= (c.c_g - c.c_e) * inst.fleet.ev_range
    for j in range(1, n + 1):
        R[:, j] -= duals.pi[j]
    R[0, :] -= duals.mu_c if subtype is Subtype.C else duals.mu_h
    for cut, value in duals.cuts:
        if isinstance(cut, IpecCut):
            if subtype is Subtype.G:
                for i, j in closure_arcs((0, *cut.path, sink)):
                    R[i, j] -= value
        elif isinstance(cut, RciCut):
            for i in cut.members:
                for j in cut.members:
                    if i != j:
                        R[i, j] -= value
        elif subtype is Subtype.G:
            R -= value * D
            R[0, :] += value * inst.fleet.ev_range
    return R


def route_reduced_cost(customers: Sequence[int], inst: Instance, subtype: Subtype, duals: DualValues) -> int:
    """Reduced cost from the column's objective coefficient and row coefficients."""
    nodes = (0, *customers, inst.sink)
    arcs = list(zip(nodes, nodes[1:]))
    dist = sum(int(inst.dist[i, j]) for i, j in arcs)
    c = inst.cost
    DE = inst.fleet.ev_range
    if subtype is Subtype.E:
        rc = c.c_e * dist
    elif subtype is Subtype.G:
        rc = c.c_g * dist - (c.c_g - c.c_e) * DE
    else:
        rc = c.c_0 * dist
    rc -= sum(duals.pi[v] for v in customers)
    rc -= duals.mu_c if subtype is Subtype.C else duals.mu_h
    for cut, value in duals.cuts:
        if isinstance(cut, IpecCut):
            if subtype is Subtype.G:
                closure = closure_arcs((0, *cut.path, inst.sink))
                rc -= value * sum(1 for a in arcs if a in closure)
        elif isinstance(cut, RciCut):
            rc -= value * sum(1 for i, j in arcs if i in cut.members and j in cut.members)
        elif subtype is Subtype.G:
            rc -= value * (dist - DE)
    return rc


# -- labeling -----------------------------------------------------------------

@dataclass
class Label:
    node: int
    load: int
    time: int  # elapsed, including service at ``node``
    dist: int
    rcost: int
    ng_forbidden: frozenset
    parent: "Label | None" = field(default=None, repr=False)

    def customers(self) -> tuple:
        out = []
        lab = self
        while lab is not None and lab.node != 0:
            out.append(lab.node)
            lab = lab.parent
        return tuple(reversed(out))


@dataclass(frozen=True)
class PricedRoute:
    route: Route
    reduced_cost: int


@dataclass
class PricingStats:
    labels_created: int = 0
    labels_kept: int = 0


def _dominates(a: Label, b: Label, use_dist: bool, use_ng: bool) -> bool:
    return (
        a.load <= b.load
        and a.time <= b.time
        and a.rcost <= b.rcost
        and (not use_dist or a.dist <= b.dist)
        and (not use_ng or a.ng_forbidden <= b.ng_forbidden)
    )


def price(
    inst: Instance,
    subtype: Subtype,
    duals: DualValues,
    ng: NgSets,
    mode: str = "exact",
    dominance: bool = True,
    stats: PricingStats | None = None,
) -> list[PricedRoute]:
    """Negative reduced-cost ng-routes for one subtype, cheapest first.

    Labels are processed in buckets of increasing load (every customer has a
    positive demand, so load strictly grows). In ``exact`` mode a label is
    dropped only when another label at the same node has a subset forbidden
    set and no more load, time, reduced cost (and distance for subtype E). The
    ``heuristic`` mode ignores forbidden sets in that test, which can drop
    useful labels.
    """
    if mode not in ("exact", "heuristic"):
        raise ValueError(f"unknown pricing mode {mode!r}")
    if subtype is Subtype.G and inst.cost.bev_mode:
        return []
    n, sink = inst.n, inst.sink
    Q, T, DE = inst.fleet.capacity, inst.fleet.max_duration, inst.fleet.ev_range
    D = inst.dist.tolist()
    Tm = inst.time.tolist()
    q = inst.demand.tolist()
    s = inst.service_time.tolist()
    R = arc_reduced_costs(inst, subtype, duals).tolist()
    use_dist = subtype is Subtype.E
    use_ng = mode == "exact"
    stats = stats if stats is not None else PricingStats()

    root = Label(0, 0, 0, 0, 0, frozenset())
    buckets: dict[int, list[Label]] = {}
    kept: list[list[Label]] = [[] for _ in range(n + 2)]

    def extend(lab: Label) -> None:
        i = lab.node
        for j in range(1, n + 1):
            if j in lab.ng_forbidden:
                continue
            load = lab.load + q[j]
            if load > Q:
                continue
            t = lab.time + Tm[i][j] + s[j]
            if t > T:
                continue
            d = lab.dist + D[i][j]
            if use_dist and d > DE:
                continue
            new = Label(j, load, t, d, lab.rcost + R[i][j], (lab.ng_forbidden & ng[j]) | {j}, lab)
            stats.labels_created += 1
            buckets.setdefault(load, []).append(new)

    extend(root)
    out: list[tuple[int, tuple, Label]] = []
    while buckets:
        load = min(buckets)
        batch = sorted(buckets.pop(load), key=lambda x: (x.time, x.rcost, x.dist, x.customers()))
        fresh: list[Label] = []
        for lab in batch:
            if dominance and any(_dominates(o, lab, use_dist, use_ng) for o in kept[lab.node]):
                continue
            kept[lab.node].append(lab)
            fresh.append(lab)
        stats.labels_kept += len(fresh)
        for lab in fresh:
            t = lab.time + Tm[lab.node][sink]
            d = lab.dist + D[lab.node][sink]
            if t <= T and (not use_dist or d <= DE):
                rc = lab.rcost + R[lab.node][sink]
                if rc < 0:
                    out.append((rc, lab.customers(), lab))
            extend(lab)
    out.sort(key=lambda x: (x[0], x[1]))
    seen = set()
    result = []
    for rc, cust, _ in out:
        if cust in seen:
            continue
        seen.add(cust)
        result.append(PricedRoute(Route.build(cust, inst), int(rc)))
    return result


def enumerate_ng_routes(inst: Instance, ng: NgSets, subtype: Subtype | None = None):
    """Every ng-feasible customer sequence meeting capacity and duration limits.

    Plain depth-first search without dominance; for subtype E the EV range is
    also enforced.
    """
    n, sink = inst.n, inst.sink
    Q, T, DE = inst.fleet.capacity, inst.fleet.max_duration, inst.fleet.ev_range
    D, Tm, q, s = inst.dist.tolist(), inst.time.tolist(), inst.demand.tolist(), inst.service_time.tolist()
    limit_dist = subtype is Subtype.E

    def dfs(path, forbidden, load, t, d):
        i = path[-1] if path else 0
        if path and t + Tm[i][sink] <= T and (not limit_dist or d + D[i][sink] <= DE):
            yield tuple(path)
        for j in range(1, n + 1):
            if j in forbidden or load + q[j] > Q:
                continue
            tj = t + Tm[i][j] + s[j]
            dj = d + D[i][j]
            if tj > T or (limit_dist and dj > DE):
                continue
            path.append(j)
            yield from dfs(path, (forbidden & ng[j]) | {j}, load + q[j], tj, dj)
            path.pop()

    yield from dfs([], frozenset(), 0, 0, 0)


# -- fractional solutions and flows -------------------------------------------

@dataclass(frozen=True)
class FractionalColumn:
    customers: tuple
    subtype: Subtype
    weight: Fraction


def fractional_from_list(doc: Iterable[dict]) -> list[FractionalColumn]:
    out = []
    for item in doc:
        w = Fraction(str(item["weight"]))
        if not 0 < w <= 1:
            raise ValueError(f"weight {w} outside (0, 1]")
        out.append(FractionalColumn(tuple(int(v) for v in item["route"]), Subtype[item["subtype"]], w))
    return out


def fractional_to_list(cols: Iterable[FractionalColumn]) -> list[dict]:
    return [
        {"route": list(c.customers), "subtype": c.subtype.name, "weight": str(c.weight)}
        for c in cols
    ]


def load_fractional(path) -> list[FractionalColumn]:
    with open(path, encoding="utf-8") as fh:
        return fractional_from_list(json.load(fh))


@dataclass(frozen=True)
class PathIncidence:
    alpha: dict
    beta: dict
    closure: frozenset
    arc_count: int

    @classmethod
    def of(cls, nodes: Sequence[int]) -> "PathIncidence":
        alpha: dict = {}
        beta: dict = {}
        for v in nodes:
            alpha[v] = alpha.get(v, 0) + 1
        for a in zip(nodes, nodes[1:]):
            beta[a] = beta.get(a, 0) + 1
        return cls(alpha, beta, frozenset(closure_arcs(nodes)), len(nodes) - 1)


@dataclass(frozen=True)
class FlowGraph:
    """Arc flows aggregated from weighted columns."""

    n: int
    x: dict

    @classmethod
    def from_columns(cls, cols: Iterable[FractionalColumn], n: int,
                     subtypes: Iterable[Subtype] = (Subtype.G,)) -> "FlowGraph":
        keep = set(subtypes)
        x: dict = {}
        for c in cols:
            if c.subtype not in keep:
                continue
            nodes = (0, *c.customers, n + 1)
            for a in zip(nodes, nodes[1:]):
                x[a] = x.get(a, Fraction(0)) + c.weight
        return cls(n, {a: v for a, v in x.items() if v > 0})

    @property
    def support(self) -> frozenset:
        return frozenset(self.x)

    def flow(self, i: int, j: int) -> Fraction:
        return self.x.get((i, j), Fraction(0))

    def successors(self) -> list[list[int]]:
        succ: list[list[int]] = [[] for _ in range(self.n + 2)]
        for i, j in sorted(self.x):
            succ[i].append(j)
        return succ


def ipec_violation(customers: Sequence[int], flow: FlowGraph) -> Fraction:
    """Closure flow of the path minus its right-hand side; positive means violated."""
    nodes = (0, *customers, flow.n + 1)
    inc = PathIncidence.of(nodes)
    return sum((flow.flow(i, j) for i, j in inc.closure), Fraction(0)) - (inc.arc_count - 1)


@dataclass(frozen=True)
class ViolatedPath:
    customers: tuple
    violation: Fraction
    distance: int


@dataclass
class SeparationResult:
    paths: list
    extensions: int
    cap_hit: bool


def separate_ipec(flow: FlowGraph, inst: Instance, cap: int = EXTENSION_CAP) -> SeparationResult:
    """Grow elementary paths from the depot along positive-flow arcs.

    A path is extended while the flow on its transitive closure exceeds its
    arc count minus one. Paths that reach the sink that way and are within
    the EV range, capacity and duration limits are reported. Partial paths
    already over one of those limits are not grown further.
    """
    n, sink = inst.n, inst.sink
    D, Tm, q, s = inst.dist.tolist(), inst.time.tolist(), inst.demand.tolist(), inst.service_time.tolist()
    Q, T, DE = inst.fleet.capacity, inst.fleet.max_duration, inst.fleet.ev_range
    succ = flow.successors()
    x = flow.x
    found: list[ViolatedPath] = []
    extensions = 0
    cap_hit = False
    path = [0]
    on_path = [False] * (n + 2)
    on_path[0] = True

    def grow(closure: Fraction, load: int, t: int, d: int) -> None:
        nonlocal extensions, cap_hit
        v = path[-1]
        for w in succ[v]:
            if on_path[w]:
                continue
            if extensions >= cap:
                cap_hit = True
                return
            extensions += 1
            gain = sum((x.get((u, w), 0) for u in path), Fraction(0))
            c2 = closure + gain
            arcs = len(path)
            if c2 <= arcs - 1:
                continue
            d2 = d + D[v][w]
            if d2 > DE:
                continue
            if w == sink:
                if t + Tm[v][w] <= T:
                    found.append(ViolatedPath(tuple(path[1:]), c2 - (arcs - 1), d2))
                continue
            l2, t2 = load + q[w], t + Tm[v][w] + s[w]
            if l2 > Q or t2 > T:
                continue
            path.append(w)
            on_path[w] = True
            grow(c2, l2, t2, d2)
            on_path[w] = False
            path.pop()

    grow(Fraction(0), 0, 0, 0)
    return SeparationResult(found, extensions, cap_hit)


def exhaustive_ipec(flow: FlowGraph, inst: Instance) -> list[ViolatedPath]:
    """Check the infeasible-path row of every feasible elementary route within the EV range."""
    from .exact import enumerate_routes

    out = []
    for er in enumerate_routes(inst, max_n=max(inst.n, 1)):
        d = er.route.stats.distance
        if d > inst.fleet.ev_range:
            continue
        v = ipec_violation(er.route.customers, flow)
        if v > 0:
            out.append(ViolatedPath(er.route.customers, v, d))
    return out


# -- rounded capacity and strengthening ---------------------------------------

def rci_violation(flow_all: FlowGraph, S: Iterable[int], inst: Instance) -> Fraction:
    S = frozenset(S)
    if not S or not S <= set(range(1, inst.n + 1)):
        raise ValueError("S must be a nonempty set of customers")
    inside = sum((v for (i, j), v in flow_all.x.items() if i in S and j in S and i != j), Fraction(0))
    demand = sum(int(inst.demand[i]) for i in S)
    vehicles = -(-demand // inst.fleet.capacity)
    return inside - (len(S) - vehicles)


def separate_rci(flow_all: FlowGraph, inst: Instance, max_size: int = 4) -> list[tuple[frozenset, Fraction]]:
    """Violated rounded capacity rows among small sets and support components."""
    n = inst.n
    candidates: set = set()
    for k in range(1, min(max_size, n) + 1):
        for S in itertools.combinations(range(1, n + 1), k):
            candidates.add(frozenset(S))
    parent = list(range(n + 2))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j in flow_all.x:
        if 1 <= i <= n and 1 <= j <= n:
            parent[find(i)] = find(j)
    comps: dict = {}
    for v in range(1, n + 1):
        comps.setdefault(find(v), set()).add(v)
    candidates.update(frozenset(c) for c in comps.values())
    out = []
    for S in candidates:
        v = rci_violation(flow_all, S, inst)
        if v > 0:
            out.append((S, v))
    out.sort(key=lambda x: (-x[1], len(x[0]), sorted(x[0])))
    return out


def strengthening_lhs(cols, inst: Instance) -> tuple[Fraction, Fraction]:
    """Left and right sides of the distance floor on subtype-G columns, in centimiles.

    ``cols`` is a ``ColumnSolution`` or an iterable of ``FractionalColumn``.
    """
    if hasattr(cols, "assignments"):
        items = [(er.route.stats.distance, k, Fraction(1)) for er, k in cols.assignments]
    else:
        items = [(Route.build(c.customers, inst).stats.distance, c.subtype, c.weight) for c in cols]
    lhs = sum((d * w for d, k, w in items if k is Subtype.G), Fraction(0))
    rhs = inst.fleet.ev_range * sum((w for _, k, w in items if k is Subtype.G), Fraction(0))
    return lhs, rhs
