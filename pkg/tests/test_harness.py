import csv
import io
import itertools
from fractions import Fraction

import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from oracles import brute_force_assignment, rand_inst
from reevrp.harness import (
    ClusterTooLarge,
    CostInputs,
    CostOrderingViolated,
    GeneratorConfig,
    InsufficientCapacity,
    ScenarioConfig,
    aggregate_superlocations,
    assign_depots,
    builtin_grid,
    cluster_service,
    derive_costs,
    gap_metrics,
    generate_instance,
    held_karp,
    load_grid,
    run_sweep,
)
from reevrp.harness.generator import StreetGrid, manhattan, travel_seconds
from reevrp.harness.sweep import BUILTIN_GRIDS, CSV_COLUMNS
from reevrp.model import dumps_instance, triangle_violations

CFG = GeneratorConfig(n_superlocations=1)


# -- costs ------------------------------------------------------------------------

class TestCosts:
    def test_baseline(self):
        cm = derive_costs()
        assert (cm.c_e, cm.c_g, cm.c_0) == (112_860, 219_802, 373_333)

    def test_rates_are_exact(self):
        c_e, c_g, c_0 = CostInputs("0.0990", "1.14", "2.22", "10.1", "3.36", "9.0").rates()
        assert c_e == Fraction("0.11286") and c_g == Fraction(222, 1010) and c_0 == Fraction(336, 900)

    def test_ordering(self):
        with pytest.raises(CostOrderingViolated):
            derive_costs(CostInputs("0.5", "1.14", "2.22", "10.1", "3.36", "9.0"))

    def test_bev_flag(self):
        assert derive_costs(bev_mode=True).bev_mode


# -- within-cell tours -------------------------------------------------------------

def brute_tour(dist):
    k = len(dist) - 1
    best = None
    for perm in itertools.permutations(range(1, k + 1)):
        nodes = (0, *perm, 0)
        length = sum(int(dist[a][b]) for a, b in zip(nodes, nodes[1:]))
        best = length if best is None else min(best, length)
    return 0 if best is None else best


class TestHeldKarp:
    @pytest.mark.parametrize("seed", range(10))
    def test_matches_permutations(self, seed):
        g = np.random.default_rng(seed)
        k = int(g.integers(1, 8))
        D = g.integers(1, 100, size=(k + 1, k + 1))
        np.fill_diagonal(D, 0)
        length, order = held_karp(D)
        assert length == brute_tour(D)
        nodes = (0, *order, 0)
        assert sum(int(D[a, b]) for a, b in zip(nodes, nodes[1:])) == length
        assert sorted(order) == list(range(1, k + 1))

    def test_single_node(self):
        assert held_karp(np.zeros((1, 1)))[0] == 0


class TestClusters:
    def test_collinear_example(self):
        c = cluster_service((25, 0), [(0, 0), (25, 0), (50, 0)], CFG)
        assert c.tour_distance == 100 and c.tour_time == 240
        assert c.service_time == 960

    def test_single_customer_at_center(self):
        c = cluster_service((10, 10), [(10, 10)], CFG)
        assert c.tour_distance == 0 and c.service_time == 240

    def test_too_large(self):
        with pytest.raises(ClusterTooLarge):
            cluster_service((0, 0), [(i, 0) for i in range(13)], CFG)

    def test_speed_conversion(self):
        assert travel_seconds(100, 15.0) == 240
        assert travel_seconds(10, 25.0) == 14


# -- instances -------------------------------------------------------------------

class TestAggregation:
    def test_one_node_per_nonempty_cell(self):
        cfg = GeneratorConfig(n_customers=5, area=2.0)
        pts = [(10, 10), (15, 12), (110, 30), (150, 150), (151, 151)]
        inst = aggregate_superlocations(pts, cfg)
        assert inst.n == 3
        assert sorted(inst.demand[1:-1].tolist()) == [1, 2, 2]

    def test_tour_distance_on_incoming_entries(self):
        cfg = GeneratorConfig(n_customers=4, area=2.0)
        pts = [(0, 0), (18, 0), (10, 10), (150, 150)]
        inst = aggregate_superlocations(pts, cfg)
        grid = StreetGrid.for_config(cfg)
        nodes = [grid.node(100, 100), grid.node(10, 10), grid.node(150, 150)]
        base = grid.distances(nodes)
        tour = cluster_service((10, 10), pts[:3], cfg).tour_distance
        assert tour > 0
        assert inst.dist[0, 1] == base[0, 1] + tour
        assert inst.dist[2, 1] == base[2, 1] + tour
        assert inst.dist[1, 2] == base[1, 2]
        assert inst.dist[1, 3] == base[1, 0]

    def test_conservation(self):
        cfg = GeneratorConfig(n_customers=300, rng_seed=3)
        inst = generate_instance(cfg)
        assert int(inst.demand.sum()) == 300

    def test_reproducible_and_metric(self):
        cfg = GeneratorConfig(n_superlocations=50, rng_seed=4)
        a, b = generate_instance(cfg), generate_instance(cfg)
        assert dumps_instance(a) == dumps_instance(b)
        assert a.dist.shape == (52, 52)
        g = np.random.default_rng(0)
        i, j, k = (g.integers(0, 52, 10_000) for _ in range(3))
        assert (a.dist[i, k] <= a.dist[i, j] + a.dist[j, k]).all()
        assert (a.time[i, k] <= a.time[i, j] + a.time[j, k]).all()
        assert triangle_violations(a.dist) == []

    def test_fleet_and_costs_from_config(self):
        inst = generate_instance(GeneratorConfig(n_superlocations=5, m_hybrid=2, ev_range_mi=20, capacity=90))
        assert inst.fleet.m_hybrid == 2 and inst.fleet.m_conventional == 5
        assert inst.fleet.ev_range == 2000 and inst.fleet.capacity == 90
        assert inst.cost.c_e == 112_860

    def test_config_validation(self):
        with pytest.raises(ValueError):
            GeneratorConfig()
        with pytest.raises(ValueError):
            GeneratorConfig(n_customers=5, cell_size=0.125)

    def test_arterials_are_faster(self):
        grid = StreetGrid.for_config(GeneratorConfig(n_customers=1, area=2.0))
        t = grid.times([grid.node(0, 0), grid.node(100, 0), grid.node(0, 10), grid.node(100, 10)])
        assert t[0, 1] < t[2, 3]
        assert (manhattan([(0, 0), (3, 4)]) == [[0, 7], [7, 0]]).all()


# -- depots -----------------------------------------------------------------------------

class TestDepots:
    def test_single_depot(self):
        res = assign_depots(np.arange(5).reshape(5, 1), [5])
        assert res.depot_of == (0,) * 5

    def test_symmetric_nearest(self):
        cost = [[1, 9], [9, 1], [2, 8], [8, 2]]
        res = assign_depots(cost, [2, 2])
        assert res.depot_of == (0, 1, 0, 1)
        assert res.per_depot(2) == [[0, 2], [1, 3]]

    def test_capacity_shortfall(self):
        with pytest.raises(InsufficientCapacity):
            assign_depots(np.ones((3, 2)), [1, 1])

    @pytest.mark.parametrize("seed", range(10))
    def test_random_against_oracles(self, seed):
        g = np.random.default_rng(seed)
        cost = g.integers(100, 5000, size=(20, 3))
        caps = [int(x) for x in g.multinomial(3, [1 / 3] * 3) + [7, 7, 6]]
        res = assign_depots(cost, caps)
        assert res.objective == brute_force_assignment(cost, caps)
        slots = np.repeat(np.arange(3), caps)
        r, c = linear_sum_assignment(cost[:, slots])
        assert res.objective == int(cost[r, slots[c]].sum())
        assert res.objective == sum(int(cost[i, k]) for i, k in enumerate(res.depot_of))
        assert all(res.depot_of.count(k) <= caps[k] for k in range(3))


# -- sweeps -----------------------------------------------------------------------------

def parse(report):
    return list(csv.DictReader(io.StringIO(report.to_csv())))


class TestGrids:
    def test_builtin_names(self):
        for name in BUILTIN_GRIDS:
            assert builtin_grid(name)
        with pytest.raises(ValueError):
            builtin_grid("nope")

    def test_grid_values(self):
        assert [c.m_hybrid for c in builtin_grid("deployment") if c.drivetrain == "REEV"] == [0, 25, 50, 100, 200, 2000]
        assert [c.max_duration_h for c in builtin_grid("workhours") if c.drivetrain == "REEV"] == [10, 11, 12, 13, 14]
        assert [c.capacity for c in builtin_grid("capacity") if c.drivetrain == "REEV"] == [150, 180, 210, 240]
        assert [c.sigma for c in builtin_grid("service")] == [0, 1, 2, 3, 4, 5]
        assert len(builtin_grid("variants")) == 6

    def test_overrides_and_file(self, tmp_path):
        assert all(c.seeds == 2 for c in builtin_grid("variants", seeds=2))
        p = tmp_path / "grid.json"
        p.write_text('[{"name": "a", "m_hybrid": 1, "algorithm": "exact"}]')
        (cell,) = load_grid(str(p), seeds=3)
        assert cell.name == "a" and cell.seeds == 3 and cell.algorithm == "exact"

    def test_cell_validation(self):
        with pytest.raises(ValueError):
            ScenarioConfig("x", drivetrain="diesel")


def test_gap_formulas():
    g = gap_metrics([110, 100, 120], 90)
    assert g["z_best"] == 100 and g["z_avg"] == 110
    assert g["gap_best"] == Fraction(10, 100) and g["gap_avg"] == Fraction(20, 110)
    assert g["avg_dev"] == Fraction(Fraction(10, 100) + Fraction(20, 100), 3)


@pytest.fixture(scope="module")
def inst():
    return rand_inst(6, 21, Q=12, mh=0)


class TestSweep:
    def test_all_cv_has_no_ev_miles(self, inst):
        grid = [ScenarioConfig("cv", m_hybrid=0, capacity=12, ev_range_mi=20, max_duration_h=8, algorithm="exact"),
                ScenarioConfig("cv-its", m_hybrid=0, capacity=12, ev_range_mi=20, max_duration_h=8, seeds=2,
                               time_limit=None, max_iterations=3)]
        rows = parse(run_sweep(grid, inst))
        assert all(r["ev_miles"] == "0.00" and r["extender_miles"] == "0.00" for r in rows)

    def test_more_hybrids_never_cost_more(self, inst):
        grid = [ScenarioConfig(f"m{m}", m_hybrid=m, capacity=12, ev_range_mi=20, max_duration_h=8, algorithm="exact")
                for m in (0, 25, 2000)]
        objs = [float(r["objective_usd"]) for r in parse(run_sweep(grid, inst))]
        assert objs[0] >= objs[1] >= objs[2]

    def test_short_bev_range_is_infeasible(self, inst):
        grid = [ScenarioConfig("bev", m_hybrid=6, m_conventional=0, capacity=12, ev_range_mi=0.5,
                               drivetrain="BEV", algorithm="exact")]
        (row,) = parse(run_sweep(grid, inst))
        assert row["status"] == "infeasible"

    def test_columns_and_recomputed_gaps(self, inst):
        grid = [ScenarioConfig("its", m_hybrid=2, capacity=12, ev_range_mi=20, max_duration_h=8, seeds=3,
                               time_limit=None, max_iterations=2)]
        report = run_sweep(grid, inst, with_bound=True)
        (row,) = parse(report)
        assert list(row) == CSV_COLUMNS
        objs = [int(v) for v in row["seed_objectives_micro_usd"].split(";")]
        lb = round(Fraction(row["lower_bound_usd"]) * 10**6)
        best, avg = min(objs), Fraction(sum(objs), len(objs))
        assert Fraction(row["objective_usd"]) * 10**6 == best
        assert row["gap_best_pct"] == f"{float(Fraction(best - lb, best) * 100):.6f}"
        assert row["gap_avg_pct"] == f"{float((avg - lb) / avg * 100):.6f}"
        dev = sum(Fraction(z - best, best) for z in objs) / len(objs)
        assert row["avg_dev_pct"] == f"{float(dev * 100):.6f}"
        assert float(row["objective_usd"]) <= float(row["avg_objective_usd"])

    def test_service_sweep_regenerates(self):
        cfg = GeneratorConfig(n_superlocations=4, rng_seed=2)
        grid = [ScenarioConfig(f"s{s}", sigma=float(s), m_hybrid=2, algorithm="exact") for s in (0, 5)]
        rows = parse(run_sweep(grid, cfg))
        assert float(rows[0]["vht_h"]) < float(rows[1]["vht_h"])
        with pytest.raises(ValueError):
            run_sweep(grid, generate_instance(cfg))

    def test_parallel_matches_serial(self, inst):
        grid = [ScenarioConfig("p", m_hybrid=2, capacity=12, seeds=2, time_limit=None, max_iterations=2)]
        assert run_sweep(grid, inst, jobs=2).to_csv() == run_sweep(grid, inst, jobs=1).to_csv()
