"""Scenario sweeps and CSV reports of operational metrics."""
from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction

from ..exact import Infeasible, InstanceTooLarge, solve_exact
from ..its import ItsParams, NoFeasibleSolutionFound, solve_its
from ..model import (
    Instance,
    ReevrpError,
    Solution,
    VehicleType,
    format_usd,
    metrics,
    micro_usd,
    solution_cost,
)
from .generator import GeneratorConfig, generate_instance


@dataclass(frozen=True)
class ScenarioConfig:
    """One sweep cell.

    ``m_hybrid`` of ``None`` means one hybrid per customer node (all hybrid);
    ``sigma`` of ``None`` keeps the service times already in the instance.
    """

    name: str
    m_hybrid: int | None = 25
    capacity: int = 120
    ev_range_mi: float = 33.0
    max_duration_h: float = 10.0
    sigma: float | None = None
    drivetrain: str = "REEV"
    algorithm: str = "its"
    seeds: int = 10
    time_limit: float | None = 60.0
    max_iterations: int | None = None
    m_conventional: int | None = None

    def __post_init__(self):
        if self.drivetrain not in ("REEV", "BEV"):
            raise ValueError(f"unknown drivetrain {self.drivetrain!r}")
        if self.algorithm not in ("its", "exact"):
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.seeds < 1:
            raise ValueError("seeds must be at least 1")

    @classmethod
    def from_dict(cls, doc: dict) -> "ScenarioConfig":
        return cls(**doc)


# -- built-in grids -------------------------------------------------------------

def builtin_grid(name: str, **overrides) -> list[ScenarioConfig]:
    """Named grids; ``overrides`` (seeds, time_limit, ...) apply to every cell."""
    base = dict(capacity=120, ev_range_mi=33.0, max_duration_h=10.0, sigma=4.0, m_hybrid=25)
    if name == "variants":
        # one small-fleet baseline and single-parameter variations of it
        small = dict(m_hybrid=5, capacity=80, ev_range_mi=33.0, max_duration_h=8.0)
        grid = [
            ScenarioConfig("1-baseline", **small),
            ScenarioConfig("2-all-reev", **{**small, "m_hybrid": None}),
            ScenarioConfig("3-all-cv", **{**small, "m_hybrid": 0}),
            ScenarioConfig("4-higher-capacity", **{**small, "capacity": 120}),
            ScenarioConfig("5-higher-range", **{**small, "ev_range_mi": 66.0}),
            ScenarioConfig("6-higher-hours", **{**small, "max_duration_h": 10.0}),
        ]
    elif name == "deployment":
        counts = (0, 25, 50, 100, 200, 2000)
        grid = []
        for drive, rng_mi in (("REEV", 33.0), ("BEV", 150.0)):
            for m in counts:
                grid.append(ScenarioConfig(f"{drive}-m{m}", **{**base, "m_hybrid": m, "ev_range_mi": rng_mi}, drivetrain=drive))
    elif name == "workhours":
        grid = [ScenarioConfig(f"{d}-T{t}", **{**base, "max_duration_h": float(t), "ev_range_mi": 33.0 if d == "REEV" else 150.0},
                               drivetrain=d) for d in ("REEV", "BEV") for t in range(10, 15)]
    elif name == "range":
        grid = [ScenarioConfig(f"REEV-D{r}", **{**base, "ev_range_mi": float(r)}) for r in (33, 40, 60, 80, 100, 125, 150)]
        grid += [ScenarioConfig(f"BEV-D{r}", **{**base, "ev_range_mi": float(r)}, drivetrain="BEV") for r in (100, 125, 150, 200, 250)]
    elif name == "capacity":
        grid = [ScenarioConfig(f"{d}-Q{q}", **{**base, "capacity": q, "ev_range_mi": 33.0 if d == "REEV" else 150.0},
                               drivetrain=d) for d in ("REEV", "BEV") for q in (150, 180, 210, 240)]
    elif name == "service":
        grid = [ScenarioConfig(f"REEV-s{s}", **{**base, "sigma": float(s)}) for s in range(0, 6)]
    else:
        raise ValueError(f"unknown grid {name!r}")
    return [replace(c, **overrides) for c in grid]


BUILTIN_GRIDS = ("variants", "deployment", "workhours", "range", "capacity", "service")


def load_grid(source: str, **overrides) -> list[ScenarioConfig]:
    """A built-in grid name or a JSON file holding a list of cells."""
    if source in BUILTIN_GRIDS:
        return builtin_grid(source, **overrides)
    with open(source, encoding="utf-8") as fh:
        doc = json.load(fh)
    return [replace(ScenarioConfig.from_dict(d), **overrides) for d in doc]


# -- running --------------------------------------------------------------------

def scenario_instance(cell: ScenarioConfig, source) -> Instance:
    """Apply a cell's fleet, limits and drivetrain to an instance source."""
    if isinstance(source, GeneratorConfig):
        gen = source if cell.sigma is None else replace(source, sigma=cell.sigma)
        inst = generate_instance(gen)
    else:
        if cell.sigma is not None:
            raise ValueError("service-time sweeps need a generator config as the instance source")
        inst = source
    n = inst.n
    inst = inst.with_fleet(
        m_hybrid=n if cell.m_hybrid is None else cell.m_hybrid,
        m_conventional=n if cell.m_conventional is None else cell.m_conventional,
        capacity=cell.capacity,
        max_duration=int(round(cell.max_duration_h * 3600)),
        ev_range=int(round(cell.ev_range_mi * 100)),
    )
    return inst.with_cost(bev_mode=cell.drivetrain == "BEV")


@dataclass
class RunResult:
    seed: int
    status: str  # "ok" or "infeasible"
    objective: int | None = None
    routes: list = field(default_factory=list)
    types: list = field(default_factory=list)


def _run_one(args) -> RunResult:
    cell, inst, seed, base_seed = args
    if cell.algorithm == "exact":
        try:
            sol, value = solve_exact(inst)
        except Infeasible:
            return RunResult(seed, "infeasible")
    else:
        params = ItsParams(time_limit=cell.time_limit, max_iterations=cell.max_iterations,
                           rng_seed=base_seed + seed)
        try:
            sol, _ = solve_its(inst, params)
        except NoFeasibleSolutionFound:
            return RunResult(seed, "infeasible")
        value = solution_cost(sol, inst)
    return RunResult(seed, "ok", value, [list(r.customers) for r in sol.routes],
                     [VehicleType(t).code for t in sol.types])


def _pct(x: Fraction | None) -> str:
    if x is None:
        return ""
    return f"{float(x * 100):.6f}"


def gap_metrics(objectives: list[int], lower_bound: int | None) -> dict:
    """Best, average, optimality gaps and average deviation from per-seed objectives.

    Gaps use ``(z - z_lb) / z``; the deviation is the mean of
    ``(z_k - z_best) / z_best``. Returned as exact fractions.
    """
    z_best = min(objectives)
    z_avg = Fraction(sum(objectives), len(objectives))
    out = {
        "z_best": z_best,
        "z_avg": z_avg,
        "avg_dev": (sum((Fraction(z - z_best, z_best) for z in objectives), Fraction(0)) / len(objectives)
                    if z_best else Fraction(0)),
        "gap_best": None,
        "gap_avg": None,
    }
    if lower_bound is not None:
        out["gap_best"] = Fraction(z_best - lower_bound, z_best) if z_best else Fraction(0)
        out["gap_avg"] = (z_avg - lower_bound) / z_avg if z_avg else Fraction(0)
    return out


CSV_COLUMNS = [
    "scenario", "algorithm", "drivetrain", "m_hybrid", "capacity", "ev_range_mi", "max_duration_h", "sigma_min",
    "seeds", "status", "objective_usd", "avg_objective_usd", "vmt_mi", "vht_h", "ev_miles", "extender_miles",
    "cv_miles", "n_hybrid", "n_conventional", "packages", "capacity_utilization", "packages_per_vehicle",
    "lower_bound_usd", "gap_best_pct", "gap_avg_pct", "avg_dev_pct", "seed_objectives_micro_usd",
]


def _miles(cmi: int) -> str:
    return f"{cmi / 100:.2f}"


@dataclass
class MetricsReport:
    rows: list = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in self.rows:
            w.writerow(row)
        return buf.getvalue()

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())


def _row(cell: ScenarioConfig, inst: Instance, results: list[RunResult], lower_bound: int | None) -> dict:
    row = {
        "scenario": cell.name,
        "algorithm": cell.algorithm,
        "drivetrain": cell.drivetrain,
        "m_hybrid": inst.fleet.m_hybrid,
        "capacity": cell.capacity,
        "ev_range_mi": f"{cell.ev_range_mi:g}",
        "max_duration_h": f"{cell.max_duration_h:g}",
        "sigma_min": "" if cell.sigma is None else f"{cell.sigma:g}",
        "seeds": len(results),
    }
    ok = [r for r in results if r.status == "ok"]
    row["seed_objectives_micro_usd"] = ";".join(
        str(micro_usd(r.objective)) if r.status == "ok" else "infeasible" for r in results
    )
    if not ok:
        row["status"] = "infeasible"
        return row
    row["status"] = "ok" if len(ok) == len(results) else "partial"
    objs = [micro_usd(r.objective) for r in ok]
    bound = None if lower_bound is None else micro_usd(lower_bound)
    g = gap_metrics(objs, bound)
    best = min(ok, key=lambda r: (r.objective, r.seed))
    sol = Solution.build(best.routes, [VehicleType.from_code(t) for t in best.types], inst)
    m = metrics(sol, inst)
    row.update(
        objective_usd=format_usd(g["z_best"] * 100),
        avg_objective_usd=f"{float(g['z_avg']) / 1e6:.6f}",
        vmt_mi=_miles(m.vmt),
        vht_h=f"{m.vht / 3600:.4f}",
        ev_miles=_miles(m.ev_miles),
        extender_miles=_miles(m.extender_miles),
        cv_miles=_miles(m.cv_miles),
        n_hybrid=m.n_hybrid,
        n_conventional=m.n_conventional,
        packages=m.packages,
        capacity_utilization=f"{m.capacity_utilization:.6f}",
        packages_per_vehicle=f"{m.packages / m.vehicles:.4f}" if m.vehicles else "",
        lower_bound_usd="" if lower_bound is None else format_usd(lower_bound),
        gap_best_pct=_pct(g["gap_best"]),
        gap_avg_pct=_pct(g["gap_avg"]),
        avg_dev_pct=_pct(g["avg_dev"]),
    )
    return row


def run_sweep(grid: list[ScenarioConfig], source, jobs: int = 1, with_bound: bool = False,
              base_seed: int = 0) -> MetricsReport:
    """Run every cell over its seeds and collect one report row per cell.

    ``source`` is an ``Instance`` or a ``GeneratorConfig``. With ``with_bound``
    the exact optimum (small instances only) is used as the lower bound for
    the gap columns. Solver failures are recorded in the row, not raised.
    """
    cells = [(cell, scenario_instance(cell, source)) for cell in grid]
    tasks = []
    for ci, (cell, inst) in enumerate(cells):
        runs = 1 if cell.algorithm == "exact" else cell.seeds
        for s in range(runs):
            tasks.append((ci, (cell, inst, s, base_seed)))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outs = list(pool.map(_run_one, [t[1] for t in tasks]))
    else:
        outs = [_run_one(t[1]) for t in tasks]
    by_cell: dict[int, list[RunResult]] = {}
    for (ci, _), res in zip(tasks, outs):
        by_cell.setdefault(ci, []).append(res)
    report = MetricsReport()
    for ci, (cell, inst) in enumerate(cells):
        bound = None
        if with_bound:
            try:
                bound = solve_exact(inst)[1]
            except (Infeasible, InstanceTooLarge):
                bound = None
        try:
            row = _row(cell, inst, by_cell[ci], bound)
        except ReevrpError as exc:
            row = {"scenario": cell.name, "algorithm": cell.algorithm, "status": f"error: {exc}"}
        report.rows.append(row)
    return report
