import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import TENTH, USD, two_customer
from oracles import rand_inst
from reevrp.model import (
    BevRangeExceeded,
    CostModel,
    FleetParams,
    Instance,
    InvalidInstance,
    MeritParams,
    Solution,
    VehicleType,
    check_feasibility,
    dumps_instance,
    format_usd,
    instance_from_dict,
    instance_to_dict,
    merit,
    metrics,
    micro_usd,
    route_cost,
    route_stats,
    solution_cost,
    solution_from_dict,
    solution_to_dict,
    triangle_violations,
)

H, C = VehicleType.HYBRID, VehicleType.CONVENTIONAL
CM = CostModel(TENTH, 2 * TENTH, 4 * TENTH)


class TestRouteCost:
    def test_electric_branch(self):
        assert route_cost(3000, H, CM, 3300) == 3 * USD

    def test_extender_branch(self):
        assert route_cost(5000, H, CM, 3300) == int(6.7 * USD)

    def test_conventional(self):
        assert route_cost(5000, C, CM, 3300) == 20 * USD

    def test_bev_overflow_raises(self):
        bev = CostModel(TENTH, 2 * TENTH, 4 * TENTH, bev_mode=True)
        assert route_cost(3300, H, bev, 3300) == 3300 * TENTH
        with pytest.raises(BevRangeExceeded):
            route_cost(3301, H, bev, 3300)

    def test_zero_range_is_all_extender(self):
        assert route_cost(100, H, CM, 0) == 100 * 2 * TENTH

    @given(st.integers(0, 10**6), st.integers(0, 10**6), st.integers(0, 10**6), st.integers(1, 10**6), st.integers(0, 10**6))
    def test_continuity_and_dominance(self, c_e, dg, d0, de, extra):
        cm = CostModel(c_e, c_e + 1 + dg, c_e + 1 + dg + d0)
        assert route_cost(de, H, cm, de) == cm.c_e * de
        d = de + extra
        assert route_cost(d, H, cm, de) <= route_cost(d, C, cm, de)


def test_cost_ordering_enforced():
    with pytest.raises(InvalidInstance):
        CostModel(5, 5, 6)
    with pytest.raises(InvalidInstance):
        CostModel(1, 7, 6)
    CostModel(1, 6, 6)


def test_fleet_validation():
    with pytest.raises(InvalidInstance):
        FleetParams(1, 1, 0, 10, 10)
    with pytest.raises(InvalidInstance):
        FleetParams(-1, 1, 1, 10, 10)


class TestSolutionCost:
    def test_empty(self, tiny):
        assert solution_cost(Solution((), ()), tiny) == 0

    def test_mixed(self):
        inst = rand_inst(3, 0)
        sol = Solution.build([[1], [2, 3]], [H, C], inst)
        expected = sum(route_cost(r.stats.distance, t, inst.cost, inst.fleet.ev_range) for r, t in zip(sol.routes, sol.types))
        assert solution_cost(sol, inst) == expected

    def test_sum_of_route_costs(self, tiny):
        sol = Solution.build([[1, 2]], [H], tiny)
        assert sol.routes[0].stats.distance == 2500
        assert solution_cost(sol, tiny) == int(2.5 * USD)


class TestFeasibility:
    def test_capacity(self):
        inst = two_customer(capacity=1)
        rep = check_feasibility(Solution.build([[1, 2]], [H], inst), inst)
        assert rep.routes[0].capacity == 1 and not rep.feasible

    def test_repeated_visit(self):
        inst = rand_inst(4, 1)
        rep = check_feasibility(Solution.build([[1, 3, 2, 3], [4]], [H, C], inst), inst)
        assert rep.routes[0].repeated == [3]
        assert rep.duplicated == [3]

    def test_missing(self):
        inst = rand_inst(5, 1)
        rep = check_feasibility(Solution.build([[1, 2], [3, 4]], [H, C], inst), inst)
        assert rep.missing == [5] and not rep.partition_ok

    def test_fleet_excess(self, tiny):
        inst = two_customer(m_hybrid=1, m_conventional=0)
        rep = check_feasibility(Solution.build([[1], [2]], [H, H], inst), inst)
        assert rep.fleet_excess[H] == 1
        assert any("hybrid" in line for line in rep.describe())

    def test_duration(self):
        inst = rand_inst(3, 2, T=100)
        rep = check_feasibility(Solution.build([[1, 2, 3]], [C], inst), inst)
        assert rep.routes[0].duration == route_stats((0, 1, 2, 3, 4), inst).duration - 100

    def test_bev_range(self):
        inst = two_customer(ev_range=2000, bev=True)
        rep = check_feasibility(Solution.build([[1, 2]], [H], inst), inst)
        assert rep.routes[0].bev_range == 500


class TestMerit:
    def test_equals_cost_when_feasible(self):
        inst = rand_inst(6, 3, Q=100)
        sol = Solution.build([[1, 2, 3], [4, 5, 6]], [H, C], inst)
        assert check_feasibility(sol, inst).feasible
        assert merit(sol, inst, MeritParams.default(inst)) == solution_cost(sol, inst)

    def test_penalties(self):
        inst = two_customer(capacity=1)
        sol = Solution.build([[1, 2]], [H], inst)
        mp = MeritParams(1000, 500)
        assert merit(sol, inst, mp) == solution_cost(sol, inst) + 1000

    def test_duration_penalty(self):
        inst = rand_inst(2, 4, Q=100, T=50)
        sol = Solution.build([[1, 2]], [C], inst)
        over = sol.routes[0].stats.duration - 50
        assert merit(sol, inst, MeritParams(7, 3)) == solution_cost(sol, inst) + 3 * over

    def test_weights_positive(self):
        with pytest.raises(ValueError):
            MeritParams(0, 1)


class TestMetrics:
    def test_hybrid_split(self):
        inst = two_customer(ev_range=2000)
        m = metrics(Solution.build([[1, 2]], [H], inst), inst)
        assert (m.ev_miles, m.extender_miles, m.vmt, m.cv_miles) == (2000, 500, 2500, 0)

    def test_all_conventional(self):
        inst = rand_inst(5, 5)
        m = metrics(Solution.build([[1, 2], [3, 4, 5]], [C, C], inst), inst)
        assert m.ev_miles == m.extender_miles == 0
        assert m.cv_miles == m.vmt
        assert m.vehicles == 2

    def test_vht_and_utilization(self):
        inst = rand_inst(4, 6, Q=10)
        sol = Solution.build([[1, 2], [3, 4]], [H, C], inst)
        m = metrics(sol, inst)
        assert m.vht == sum(r.stats.duration for r in sol.routes)
        assert m.capacity_utilization == pytest.approx(int(inst.demand.sum()) / 20)

    def test_requires_feasible(self):
        inst = two_customer(capacity=1)
        with pytest.raises(Exception):
            metrics(Solution.build([[1, 2]], [H], inst), inst)


class TestDocuments:
    def test_instance_roundtrip(self):
        inst = rand_inst(5, 7, bev=True)
        again = instance_from_dict(json.loads(dumps_instance(inst)))
        assert dumps_instance(again) == dumps_instance(inst)
        assert again.cost.bev_mode

    def test_instance_keys(self, tiny):
        doc = instance_to_dict(tiny)
        assert set(doc) == {"n", "demand", "service_time_s", "dist_centimiles", "time_s", "fleet", "cost"}
        assert len(doc["dist_centimiles"]) == 16

    def test_malformed(self):
        with pytest.raises(InvalidInstance):
            instance_from_dict({"n": 1})
        doc = instance_to_dict(two_customer())
        doc["demand"] = [0, 0, 1, 0]
        with pytest.raises(InvalidInstance):
            instance_from_dict(doc)

    def test_solution_roundtrip(self):
        inst = rand_inst(4, 8)
        sol = Solution.build([[2, 1], [4, 3]], [C, H], inst)
        doc = solution_to_dict(sol, inst, certified=True)
        assert doc["types"] == ["C", "H"] and doc["certified"] is True
        assert doc["objective_micro_usd"] == micro_usd(solution_cost(sol, inst))
        assert solution_from_dict(doc, inst) == sol

    @pytest.mark.parametrize("route", [[1, 3], [-1], [0], [1.0], [True]])
    def test_solution_rejects_non_customers(self, route):
        with pytest.raises(InvalidInstance):
            solution_from_dict({"routes": [route], "types": ["H"]}, two_customer())


def test_money_rounding():
    assert micro_usd(150) == 2 and micro_usd(149) == 1 and micro_usd(-150) == -2
    assert format_usd(123_456_789_49) == "123.456789"
    assert format_usd(-50) == "-0.000001"


def test_rejects_nonpositive_offdiagonal():
    inst = two_customer()
    d = inst.dist.copy()
    d[1, 2] = 0
    with pytest.raises(InvalidInstance):
        Instance(2, inst.demand, inst.service_time, d, inst.time, inst.fleet, inst.cost)


def test_stats_consistency_and_triangle():
    inst = rand_inst(8, 9)
    assert triangle_violations(inst.dist) == []
    sol = Solution.build([[1, 2, 3, 4], [5, 6, 7, 8]], [H, C], inst)
    for r in sol.routes:
        assert r.stats == route_stats(r.nodes(inst), inst)
        assert r.stats.ev_overflow == max(r.stats.distance - inst.fleet.ev_range, 0)


def test_fingerprint_ignores_route_order():
    inst = rand_inst(4, 10)
    a = Solution.build([[1, 2], [3, 4]], [H, C], inst)
    b = Solution.build([[3, 4], [1, 2]], [C, H], inst)
    c = Solution.build([[3, 4], [1, 2]], [H, C], inst)
    assert a.fingerprint() == b.fingerprint() != c.fingerprint()
    assert a.canonical() == b.canonical()
