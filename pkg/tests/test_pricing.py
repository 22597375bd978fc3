import random
from fractions import Fraction

import pytest

from conftest import TENTH, USD, two_customer
from oracles import (
    arc_flow,
    elementary_routes,
    exhaustive_violations,
    ipec_row_violation,
    min_reduced_cost,
    nearest_sets,
    ng_routes,
    path_dist,
    rand_inst,
    random_duals,
    random_feasible_solution,
)
from reevrp.exact import map_to_columns, solve_exact
from reevrp.model import Subtype
from reevrp.pricing import (
    DualValues,
    FlowGraph,
    FractionalColumn,
    InvalidDuals,
    IpecCut,
    NgSets,
    PathIncidence,
    PricingStats,
    RciCut,
    StrengtheningCut,
    duals_from_dict,
    enumerate_ng_routes,
    fractional_from_list,
    fractional_to_list,
    ipec_violation,
    is_ng_feasible,
    price,
    rci_violation,
    route_reduced_cost,
    separate_ipec,
    separate_rci,
    strengthening_lhs,
)

E, G, K = Subtype.E, Subtype.G, Subtype.C


def min_rc(routes):
    return min((p.reduced_cost for p in routes), default=None)


def negative_min(value):
    return value if value is not None and value < 0 else None


# -- ng-sets -------------------------------------------------------------------

class TestNgSets:
    def test_nearest_matches_reference(self):
        inst = rand_inst(8, 1)
        ng = NgSets.nearest(inst, 4)
        assert list(ng.sets) == nearest_sets(inst, 4)
        assert all(i in ng[i] and len(ng[i]) == 4 for i in range(1, 9))

    def test_size_caps_at_n(self):
        inst = rand_inst(3, 1)
        assert all(len(NgSets.nearest(inst, 8)[i]) == 3 for i in range(1, 4))

    def test_size_one_forbids_only_immediate_repeats(self):
        ng = NgSets.nearest(rand_inst(3, 2), 1)
        assert is_ng_feasible((1, 2, 1), ng)
        assert not is_ng_feasible((1, 1), ng)

    def test_full_sets_mean_elementary(self):
        inst = rand_inst(5, 3, Q=8)
        full = NgSets.full(inst)
        got = sorted(enumerate_ng_routes(inst, full))
        assert got == sorted(elementary_routes(inst))

    def test_enumeration_matches_reference(self):
        inst = rand_inst(5, 4, Q=7)
        ng = NgSets.nearest(inst, 2)
        assert sorted(enumerate_ng_routes(inst, ng)) == sorted(ng_routes(inst, ng.sets))


# -- duals ------------------------------------------------------------------------

class TestDuals:
    def test_signs(self):
        with pytest.raises(InvalidDuals):
            DualValues((0, 0, 0), mu_h=1)
        with pytest.raises(InvalidDuals):
            DualValues((0, 0, 0), cuts=((IpecCut((1,)), 5),))
        with pytest.raises(InvalidDuals):
            DualValues((0, 0, 0), cuts=((StrengtheningCut(), -1),))

    def test_document(self):
        doc = {"degree:1": "6", "degree:2": 6.5, "fleet:hybrid": "-0.25", "ipec:1-2": "-1",
               "rci:1,2": "-0.5", "strengthening": "0.05"}
        d = duals_from_dict(doc, 2)
        assert d.pi == (0, 6 * USD, int(6.5 * USD), 0)
        assert d.mu_h == -USD // 4 and d.mu_c == 0
        assert (IpecCut((1, 2)), -USD) in d.cuts
        assert (RciCut(frozenset({1, 2})), -USD // 2) in d.cuts
        assert (StrengtheningCut(), 50_000) in d.cuts

    def test_unknown_key(self):
        with pytest.raises(InvalidDuals):
            duals_from_dict({"degree:3": 1}, 2)
        with pytest.raises(InvalidDuals):
            duals_from_dict({"bogus": 1}, 2)


# -- pricing -----------------------------------------------------------------------

class TestPrice:
    def test_zero_duals_give_nothing(self):
        inst = rand_inst(6, 5)
        zero = DualValues.zero(inst.n)
        ng = NgSets.nearest(inst)
        assert price(inst, E, zero, ng) == [] and price(inst, K, zero, ng) == []

    def test_two_customer_conventional(self):
        inst = two_customer()
        duals = DualValues((0, 6 * USD, 6 * USD, 0))
        out = price(inst, K, duals, NgSets.full(inst))
        assert out[0].route.customers in {(1, 2), (2, 1)}
        assert out[0].reduced_cost == 4 * TENTH * 2500 - 12 * USD == -2 * USD

    def test_electric_range_filter(self):
        duals = DualValues((0, 6 * USD, 6 * USD, 0))
        short = two_customer(ev_range=1500)
        assert price(short, E, duals, NgSets.full(short)) == []
        mid = two_customer(ev_range=2000)
        got = {p.route.customers for p in price(mid, E, duals, NgSets.full(mid))}
        assert got == {(1,), (2,)}

    def test_bev_has_no_extender_columns(self):
        inst = rand_inst(4, 1, bev=True)
        duals, _ = random_duals(inst, random.Random(1))
        assert price(inst, G, duals, NgSets.nearest(inst)) == []

    def test_unknown_mode(self):
        inst = two_customer()
        with pytest.raises(ValueError):
            price(inst, K, DualValues.zero(2), NgSets.full(inst), mode="fast")

    @pytest.mark.parametrize("seed", range(10))
    def test_exact_matches_brute_force(self, seed):
        r = random.Random(seed)
        inst = rand_inst(r.randint(3, 6), seed, Q=r.randint(5, 10), DE=r.choice([1500, 3300, 6000]))
        ng = NgSets.nearest(inst, r.randint(1, 4))
        duals, kw = random_duals(inst, r)
        for k, name in ((E, "E"), (G, "G"), (K, "C")):
            limit = inst.fleet.ev_range if k is E else None
            ref = negative_min(min_reduced_cost(inst, ng_routes(inst, ng.sets, limit), name, kw))
            out = price(inst, k, duals, ng)
            assert min_rc(out) == ref
            for p in out:
                assert p.reduced_cost < 0
                assert p.reduced_cost == route_reduced_cost(p.route.customers, inst, k, duals)
                assert is_ng_feasible(p.route.customers, ng)

    @pytest.mark.parametrize("seed", range(4))
    def test_full_ng_matches_elementary(self, seed):
        r = random.Random(100 + seed)
        inst = rand_inst(5, seed, Q=9)
        duals, kw = random_duals(inst, r)
        for k, name in ((E, "E"), (G, "G"), (K, "C")):
            limit = inst.fleet.ev_range if k is E else None
            ref = negative_min(min_reduced_cost(inst, elementary_routes(inst, limit), name, kw))
            assert min_rc(price(inst, k, duals, NgSets.full(inst))) == ref

    @pytest.mark.parametrize("seed", range(4))
    def test_dominance_is_safe(self, seed):
        r = random.Random(200 + seed)
        inst = rand_inst(6, seed, Q=9)
        ng = NgSets.nearest(inst, 3)
        duals, _ = random_duals(inst, r)
        for k in (E, G, K):
            on, off = PricingStats(), PricingStats()
            a = price(inst, k, duals, ng, dominance=True, stats=on)
            b = price(inst, k, duals, ng, dominance=False, stats=off)
            assert min_rc(a) == min_rc(b)
            assert on.labels_kept <= off.labels_kept

    @pytest.mark.parametrize("seed", range(4))
    def test_heuristic_never_beats_exact(self, seed):
        r = random.Random(300 + seed)
        inst = rand_inst(6, seed, Q=9)
        ng = NgSets.nearest(inst, 3)
        duals, _ = random_duals(inst, r)
        for k in (E, G, K):
            exact = min_rc(price(inst, k, duals, ng))
            heur = min_rc(price(inst, k, duals, ng, mode="heuristic"))
            if heur is not None:
                assert exact is not None and exact <= heur


# -- infeasible path rows ----------------------------------------------------------------------

def test_path_incidence():
    inc = PathIncidence.of((0, 1, 2, 4))
    assert inc.arc_count == 3
    assert inc.closure == {(0, 1), (0, 2), (0, 4), (1, 2), (1, 4), (2, 4)}
    assert inc.beta == {(0, 1): 1, (1, 2): 1, (2, 4): 1}


class TestIpec:
    def test_short_integral_extender_route(self):
        inst = two_customer(ev_range=3000)
        cols = [FractionalColumn((1, 2), G, Fraction(1))]
        res = separate_ipec(FlowGraph.from_columns(cols, 2), inst)
        assert [p.customers for p in res.paths] == [(1, 2)]
        assert res.paths[0].violation == 1 and not res.cap_hit

    def test_long_extender_routes_are_fine(self):
        inst = two_customer(ev_range=2000)
        cols = [FractionalColumn((1, 2), G, Fraction(1))]
        assert separate_ipec(FlowGraph.from_columns(cols, 2), inst).paths == []

    def test_other_subtypes_carry_no_flow(self):
        cols = [FractionalColumn((1, 2), E, Fraction(1)), FractionalColumn((2,), K, Fraction(1, 2))]
        assert FlowGraph.from_columns(cols, 2).x == {}

    def test_shared_subpath_fractional(self):
        inst = rand_inst(5, 7, Q=20, DE=10**5)
        cols = [
            FractionalColumn((1, 2, 3), G, Fraction(1, 2)),
            FractionalColumn((1, 2, 4, 5), G, Fraction(1, 2)),
            FractionalColumn((4, 5), K, Fraction(1, 2)),
            FractionalColumn((3,), K, Fraction(1, 2)),
        ]
        flow = FlowGraph.from_columns(cols, 5)
        x = arc_flow([(c.customers, c.subtype.name, c.weight) for c in cols], 5)
        res = separate_ipec(flow, inst)
        expected = exhaustive_violations(inst, x)
        assert bool(res.paths) == bool(expected)
        for p in res.paths:
            assert ipec_violation(p.customers, flow) == ipec_row_violation(p.customers, x, 5) > 0
            assert path_dist(inst, p.customers) <= inst.fleet.ev_range

    def test_cap_is_reported(self):
        inst = rand_inst(5, 7, Q=20, DE=10**5)
        cols = [FractionalColumn((1, 2, 3, 4, 5), G, Fraction(1))]
        res = separate_ipec(FlowGraph.from_columns(cols, 5), inst, cap=2)
        assert res.cap_hit and res.extensions == 2

    @pytest.mark.parametrize("seed", range(8))
    def test_random_against_exhaustive(self, seed):
        r = random.Random(seed)
        inst = rand_inst(r.randint(3, 6), seed, Q=8, DE=r.choice([1500, 3000, 6000]))
        k = r.randint(1, 3)
        cols = []
        for _ in range(k):
            sol = random_feasible_solution(inst, r)
            for route in sol.routes:
                cols.append(FractionalColumn(route.customers, r.choice([G, G, K, E]), Fraction(1, k)))
        flow = FlowGraph.from_columns(cols, inst.n)
        x = arc_flow([(c.customers, c.subtype.name, c.weight) for c in cols], inst.n)
        assert flow.x == {a: v for a, v in x.items() if v}
        res = separate_ipec(flow, inst)
        assert bool(res.paths) == bool(exhaustive_violations(inst, x))
        for p in res.paths:
            assert ipec_row_violation(p.customers, x, inst.n) > 0


# -- rounded capacity and strengthening ----------------------------------------------------------

class TestRci:
    def test_pair(self):
        inst = two_customer(capacity=2)
        flow = FlowGraph(2, {(1, 2): Fraction(1), (2, 1): Fraction(1)})
        assert rci_violation(flow, {1, 2}, inst) == 1

    def test_no_internal_flow(self):
        inst = two_customer(capacity=2)
        flow = FlowGraph(2, {(0, 1): Fraction(1), (1, 3): Fraction(1)})
        assert rci_violation(flow, {1, 2}, inst) <= 0

    def test_rejects_bad_sets(self):
        with pytest.raises(ValueError):
            rci_violation(FlowGraph(2, {}), set(), two_customer())

    @pytest.mark.parametrize("seed", range(6))
    def test_feasible_integral_solutions_satisfy_all_small_sets(self, seed):
        r = random.Random(seed)
        inst = rand_inst(7, seed, Q=6, mh=3)
        sol = random_feasible_solution(inst, r)
        cols = [FractionalColumn(rt.customers, K, Fraction(1)) for rt in sol.routes]
        flow = FlowGraph.from_columns(cols, inst.n, subtypes=tuple(Subtype))
        assert separate_rci(flow, inst) == []

    def test_separation_finds_overloaded_set(self):
        inst = rand_inst(4, 3, Q=2)
        inst = inst.with_fleet(capacity=int(inst.demand[1] + inst.demand[2]) - 1)
        cols = [FractionalColumn((1, 2), K, Fraction(1)), FractionalColumn((3, 4), K, Fraction(1))]
        flow = FlowGraph.from_columns(cols, 4, subtypes=tuple(Subtype))
        found = dict(separate_rci(flow, inst))
        assert found[frozenset({1, 2})] == 1


class TestStrengthening:
    def test_single_route(self):
        inst = two_customer(ev_range=2000)
        cols = [FractionalColumn((1, 2), G, Fraction(1))]
        assert strengthening_lhs(cols, inst) == (2500, 2000)

    def test_empty(self):
        assert strengthening_lhs([], two_customer()) == (0, 0)

    @pytest.mark.parametrize("seed", range(5))
    def test_optimal_solutions_satisfy_it(self, seed):
        inst = rand_inst(6, seed, mh=3, DE=1500)
        sol, _ = solve_exact(inst)
        lhs, rhs = strengthening_lhs(map_to_columns(sol, inst), inst)
        assert lhs >= rhs


def test_fractional_document_roundtrip():
    cols = [FractionalColumn((1, 2), G, Fraction(1, 3)), FractionalColumn((3,), K, Fraction(1))]
    assert fractional_from_list(fractional_to_list(cols)) == cols
    with pytest.raises(ValueError):
        fractional_from_list([{"route": [1], "subtype": "G", "weight": "3/2"}])
