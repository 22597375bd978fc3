"""Synthetic depot-level instances on a street grid.

Customers are scattered over a square region and grouped into square cells.
Each non-empty cell becomes one superlocation at its centre. Its customers are
visited by an exact closed tour from the centre over Manhattan distances at a
low local speed; the tour time plus a per-package drop time is the service
time and the tour distance is added to every incoming distance. Travel
between superlocations follows shortest paths on a grid whose arterial lines
are faster than the other streets.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from ..model import CostModel, FleetParams, Instance, ReevrpError
from .costs import derive_costs

MAX_CLUSTER = 12


class ClusterTooLarge(ReevrpError):
    pass


def _cmi(miles: float) -> int:
    return int(round(miles * 100))


def travel_seconds(centimiles: int, mph: float) -> int:
    """Seconds to cover a distance at a constant speed, rounded half up."""
    return int(np.floor(centimiles * 36.0 / mph + 0.5))


@dataclass(frozen=True)
class GeneratorConfig:
    """Geometry in miles, speeds in mph, drop time in minutes.

    Exactly one of ``n_superlocations`` (pick that many cells and fill each
    with 1..``max_cluster`` customers) and ``n_customers`` (scatter customers
    uniformly, at most ``max_cluster`` per cell) should be set.
    """

    n_superlocations: int | None = None
    n_customers: int | None = None
    area: float = 8.0
    cell_size: float = 0.2
    grid_pitch: float = 0.1
    arterial_every: int = 10
    intra_speed: float = 15.0
    local_speed: float = 25.0
    major_speed: float = 40.0
    sigma: float = 4.0
    max_cluster: int = MAX_CLUSTER
    depot: tuple[float, float] | None = None
    rng_seed: int = 0
    m_hybrid: int = 25
    m_conventional: int | None = None
    capacity: int = 120
    max_duration_h: float = 10.0
    ev_range_mi: float = 33.0
    bev_mode: bool = False
    cost: CostModel | None = field(default=None, compare=False)

    def __post_init__(self):
        if (self.n_superlocations is None) == (self.n_customers is None):
            raise ValueError("set exactly one of n_superlocations and n_customers")
        if not 1 <= self.max_cluster <= MAX_CLUSTER:
            raise ValueError(f"max_cluster must lie in 1..{MAX_CLUSTER}")
        for name in ("area", "cell_size", "grid_pitch", "intra_speed", "local_speed", "major_speed"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        cell, pitch, area = _cmi(self.cell_size), _cmi(self.grid_pitch), _cmi(self.area)
        if cell % 2 or (cell // 2) % pitch or area % cell:
            raise ValueError("need half the cell size to be a multiple of the grid pitch and the area a multiple of the cell size")

    @property
    def cells_per_side(self) -> int:
        return _cmi(self.area) // _cmi(self.cell_size)

    def fleet(self, n: int) -> FleetParams:
        return FleetParams(
            self.m_hybrid,
            n if self.m_conventional is None else self.m_conventional,
            self.capacity,
            int(round(self.max_duration_h * 3600)),
            _cmi(self.ev_range_mi),
        )

    def cost_model(self) -> CostModel:
        base = self.cost if self.cost is not None else derive_costs()
        return replace(base, bev_mode=self.bev_mode)


# -- exact small tours --------------------------------------------------------

def held_karp(dist: np.ndarray) -> tuple[int, tuple[int, ...]]:
    """Shortest closed tour from node 0 through all others.

    Subset dynamic program vectorized over the subsets of each size. Returns
    the length and the visiting order of nodes 1..k.
    """
    dist = np.asarray(dist, dtype=np.int64)
    k = dist.shape[0] - 1
    if k == 0:
        return 0, ()
    inf = np.iinfo(np.int64).max // 4
    full = 1 << k
    C = dist[1:, 1:]
    dp = np.full((full, k), inf, dtype=np.int64)
    parent = np.full((full, k), -1, dtype=np.int64)
    for j in range(k):
        dp[1 << j, j] = dist[0, j + 1]
    masks = np.arange(full)
    popcount = np.array([bin(m).count("1") for m in range(full)])
    member = ((masks[:, None] >> np.arange(k)[None, :]) & 1).astype(bool)
    for size in range(2, k + 1):
        layer = masks[popcount == size]
        for j in range(k):
            sel = layer[member[layer, j]]
            prev = sel ^ (1 << j)
            vals = dp[prev] + C[:, j][None, :]
            vals[~member[prev]] = inf
            arg = vals.argmin(axis=1)
            dp[sel, j] = vals[np.arange(len(sel)), arg]
            parent[sel, j] = arg
    closing = dp[full - 1] + dist[1:, 0]
    j = int(closing.argmin())
    length = int(closing[j])
    order = []
    mask = full - 1
    while j >= 0:
        order.append(j + 1)
        nxt = int(parent[mask, j])
        mask ^= 1 << j
        j = nxt
    return length, tuple(reversed(order))


def manhattan(points) -> np.ndarray:
    P = np.asarray(points, dtype=np.int64).reshape(-1, 2)
    return np.abs(P[:, None, :] - P[None, :, :]).sum(-1)


@dataclass(frozen=True)
class Cluster:
    center: tuple[int, int]  # centimiles
    customers: tuple  # points in centimiles
    demand: int
    tour_distance: int
    tour_time: int
    service_time: int
    order: tuple


def cluster_service(center, customers, config: GeneratorConfig, demands=None) -> Cluster:
    """Closed-tour distance and time plus the service time of one cell."""
    if len(customers) > MAX_CLUSTER:
        raise ClusterTooLarge(f"{len(customers)} customers in one cell (limit {MAX_CLUSTER})")
    pts = [tuple(int(v) for v in center)] + [tuple(int(v) for v in p) for p in customers]
    length, order = held_karp(manhattan(pts))
    t = travel_seconds(length, config.intra_speed)
    demand = len(customers) if demands is None else int(sum(demands))
    drop = int(round(config.sigma * 60)) * len(customers)
    return Cluster(pts[0], tuple(pts[1:]), demand, int(length), t, t + drop, order)


# -- street grid --------------------------------------------------------------

@dataclass
class StreetGrid:
    """Square grid of intersections with two speed tiers."""

    side: int  # intersections per side
    pitch: int  # centimiles
    edge_time_local: int
    edge_time_major: int
    arterial_every: int

    @classmethod
    def for_config(cls, config: GeneratorConfig) -> "StreetGrid":
        pitch = _cmi(config.grid_pitch)
        side = _cmi(config.area) // pitch + 1
        return cls(side, pitch, travel_seconds(pitch, config.local_speed),
                   travel_seconds(pitch, config.major_speed), config.arterial_every)

    def node(self, x: int, y: int) -> int:
        gx, gy = int(round(x / self.pitch)), int(round(y / self.pitch))
        return gy * self.side + gx

    def coords(self, node: int) -> tuple[int, int]:
        gy, gx = divmod(node, self.side)
        return gx * self.pitch, gy * self.pitch

    def graph(self) -> csr_matrix:
        s = self.side
        idx = np.arange(s * s).reshape(s, s)
        # horizontal edges lie on row gy, vertical edges on column gx
        major_rows = (np.arange(s) % self.arterial_every) == 0
        h_t = np.where(major_rows, self.edge_time_major, self.edge_time_local)
        a, b = idx[:, :-1].ravel(), idx[:, 1:].ravel()
        ht = np.repeat(h_t, s - 1)
        a2, b2 = idx[:-1, :].ravel(), idx[1:, :].ravel()
        vt = np.tile(h_t, s - 1)
        rows = np.concatenate([a, b, a2, b2])
        cols = np.concatenate([b, a, b2, a2])
        w = np.concatenate([ht, ht, vt, vt]).astype(np.float64)
        return csr_matrix((w, (rows, cols)), shape=(s * s, s * s))

    def times(self, nodes: list[int], chunk: int = 256) -> np.ndarray:
        g = self.graph()
        nodes_arr = np.asarray(nodes)
        out = np.empty((len(nodes), len(nodes)), dtype=np.int64)
        for start in range(0, len(nodes), chunk):
            part = dijkstra(g, directed=True, indices=nodes_arr[start : start + chunk])
            out[start : start + chunk] = np.rint(part[:, nodes_arr]).astype(np.int64)
        return out

    def distances(self, nodes: list[int]) -> np.ndarray:
        pts = [self.coords(v) for v in nodes]
        return manhattan(pts)


# -- instances ----------------------------------------------------------------

def aggregate_superlocations(customers, config: GeneratorConfig, demands=None) -> Instance:
    """Build an instance from customer points (centimiles) by cell aggregation."""
    cell = _cmi(config.cell_size)
    pts = [tuple(int(v) for v in p) for p in customers]
    dem = [1] * len(pts) if demands is None else [int(d) for d in demands]
    groups: dict = {}
    for p, d in zip(pts, dem):
        key = (p[0] // cell, p[1] // cell)
        groups.setdefault(key, ([], []))
        groups[key][0].append(p)
        groups[key][1].append(d)
    clusters = []
    for key in sorted(groups):
        cx, cy = key
        center = (cx * cell + cell // 2, cy * cell + cell // 2)
        members, ds = groups[key]
        clusters.append(cluster_service(center, members, config, ds))
    return _assemble(clusters, config)


def _assemble(clusters: list[Cluster], config: GeneratorConfig) -> Instance:
    grid = StreetGrid.for_config(config)
    area = _cmi(config.area)
    depot = config.depot
    dx, dy = (area // 2, area // 2) if depot is None else (_cmi(depot[0]), _cmi(depot[1]))
    nodes = [grid.node(dx, dy)] + [grid.node(*c.center) for c in clusters]
    if len(set(nodes)) != len(nodes):
        raise ValueError("superlocations must occupy distinct intersections away from the depot")
    n = len(clusters)
    D0 = grid.distances(nodes)
    T0 = grid.times(nodes)
    size = n + 2
    dist = np.zeros((size, size), dtype=np.int64)
    time = np.zeros((size, size), dtype=np.int64)
    idx = list(range(n + 1)) + [0]
    dist[:] = D0[np.ix_(idx, idx)]
    time[:] = T0[np.ix_(idx, idx)]
    tour = np.array([0] + [c.tour_distance for c in clusters] + [0], dtype=np.int64)
    dist += tour[None, :]
    np.fill_diagonal(dist, 0)
    dist[0, n + 1] = dist[n + 1, 0] = 0
    time[0, n + 1] = time[n + 1, 0] = 0
    demand = np.array([0] + [c.demand for c in clusters] + [0], dtype=np.int64)
    service = np.array([0] + [c.service_time for c in clusters] + [0], dtype=np.int64)
    return Instance(n, demand, service, dist, time, config.fleet(n), config.cost_model())


def sample_customers(config: GeneratorConfig) -> list[tuple[int, int]]:
    """Customer points in centimiles, reproducible from ``rng_seed``."""
    rng = np.random.Generator(np.random.PCG64(config.rng_seed))
    cell = _cmi(config.cell_size)
    k = config.cells_per_side
    if config.n_superlocations is not None:
        if config.n_superlocations > k * k:
            raise ValueError(f"only {k * k} cells available")
        chosen = np.sort(rng.choice(k * k, size=config.n_superlocations, replace=False))
        pts = []
        for c in chosen.tolist():
            cy, cx = divmod(c, k)
            m = int(rng.integers(1, config.max_cluster + 1))
            xy = rng.integers(0, cell, size=(m, 2))
            pts.extend((cx * cell + int(a), cy * cell + int(b)) for a, b in xy)
        return pts
    counts: dict = {}
    pts = []
    area = _cmi(config.area)
    if config.n_customers > k * k * config.max_cluster:
        raise ValueError("too many customers for the cell limit")
    while len(pts) < config.n_customers:
        x, y = (int(v) for v in rng.integers(0, area, size=2))
        key = (x // cell, y // cell)
        if counts.get(key, 0) >= config.max_cluster:
            continue
        counts[key] = counts.get(key, 0) + 1
        pts.append((x, y))
    return pts


def generate_instance(config: GeneratorConfig) -> Instance:
    return aggregate_superlocations(sample_customers(config), config)
