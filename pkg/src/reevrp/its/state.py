"""Mutable search state with cached route statistics and prefix sums."""
from __future__ import annotations

import numpy as np

from ..fingerprint import MASK, mix64, route_hash, TYPE_SALT
from ..model import (
    Instance,
    MeritParams,
    Route,
    RouteStats,
    Solution,
    VehicleType,
    bev_penalty_rate,
)
from . import kernels
from .routeops import apply_to_lists, is_intra

HYBRID = int(VehicleType.HYBRID)
CONVENTIONAL = int(VehicleType.CONVENTIONAL)


def _typed(uhash: int, vtype: int) -> int:
    return mix64(uhash ^ ((vtype + 1) * TYPE_SALT & MASK))


class SearchState:
    """Routes in slots ``0..n_routes-1``; slot ``n_routes`` is an empty spare
    route whenever another vehicle is still available.

    Per-route load, distance and duration are maintained incrementally from
    O(1) move evaluations; prefix arrays are rebuilt for touched routes only.
    """

    def __init__(self, inst: Instance, params: MeritParams):
        self.inst = inst
        self.params = params
        self.D = inst.dist
        self.Tm = inst.time
        self.q = inst.demand
        self.s = inst.service_time
        self.sink = inst.n + 1
        self.Q = inst.fleet.capacity
        self.Tmax = inst.fleet.max_duration
        self.DE = inst.fleet.ev_range
        self.ce = inst.cost.c_e
        self.cg = bev_penalty_rate(inst, params) if inst.cost.bev_mode else inst.cost.c_g
        self.c0 = inst.cost.c_0
        self.phiQ = params.phi_q
        self.phiT = params.phi_t
        self.m_hybrid = inst.fleet.m_hybrid
        self.m_total = inst.fleet.m_hybrid + inst.fleet.m_conventional
        self.n_routes = 0
        self.n_slots = 0
        self._alloc(4, 8)
        self._ensure_spare()
        self.merit = 0
        self.fp = 0

    # -- storage -------------------------------------------------------------

    def _alloc(self, rows: int, cols: int) -> None:
        self.seq = np.zeros((rows, cols), dtype=np.int64)
        self.PD = np.zeros((rows, cols + 1), dtype=np.int64)
        self.PT = np.zeros_like(self.PD)
        self.RD = np.zeros_like(self.PD)
        self.RT = np.zeros_like(self.PD)
        self.PQ = np.zeros_like(self.PD)
        self.PS = np.zeros_like(self.PD)
        self.lens = np.zeros(rows, dtype=np.int64)
        self.load = np.zeros(rows, dtype=np.int64)
        self.dist = np.zeros(rows, dtype=np.int64)
        self.dur = np.zeros(rows, dtype=np.int64)
        self.vtype = np.zeros(rows, dtype=np.int64)
        self.rmerit = np.zeros(rows, dtype=np.int64)
        self.uhash = np.zeros(rows, dtype=np.uint64)
        self.thash = np.zeros(rows, dtype=np.uint64)

    def _grow(self, rows: int, cols: int) -> None:
        old_rows, old_cols = self.seq.shape
        rows = max(rows, old_rows)
        cols = max(cols, old_cols)
        if (rows, cols) == (old_rows, old_cols):
            return
        saved = {name: getattr(self, name) for name in (
            "seq", "PD", "PT", "RD", "RT", "PQ", "PS", "lens", "load", "dist",
            "dur", "vtype", "rmerit", "uhash", "thash")}
        self._alloc(rows, cols)
        for name, arr in saved.items():
            new = getattr(self, name)
            if arr.ndim == 2:
                new[: arr.shape[0], : arr.shape[1]] = arr
            else:
                new[: arr.shape[0]] = arr

    def _ensure_rows(self, rows: int) -> None:
        if rows > self.seq.shape[0]:
            self._grow(max(rows, 2 * self.seq.shape[0]), 0)

    def _ensure_cols(self, cols: int) -> None:
        if cols > self.seq.shape[1]:
            self._grow(0, max(cols, 2 * self.seq.shape[1]))

    def _write_route(self, r: int, nodes: list[int]) -> None:
        L = len(nodes)
        self._ensure_cols(L)
        self.seq[r, :L] = nodes
        self.lens[r] = L
        self._refresh_prefix(r)
        self.uhash[r] = route_hash(nodes[1:-1]) if L > 2 else 0

    def _refresh_prefix(self, r: int) -> None:
        L = int(self.lens[r])
        nodes = self.seq[r, :L]
        fwd_d = self.D[nodes[:-1], nodes[1:]]
        fwd_t = self.Tm[nodes[:-1], nodes[1:]]
        rev_d = self.D[nodes[1:], nodes[:-1]]
        rev_t = self.Tm[nodes[1:], nodes[:-1]]
        for arr, vals in ((self.PD, fwd_d), (self.PT, fwd_t), (self.RD, rev_d), (self.RT, rev_t)):
            arr[r, 0] = 0
            np.cumsum(vals, out=arr[r, 1:L])
        self.PQ[r, 0] = 0
        np.cumsum(self.q[nodes], out=self.PQ[r, 1 : L + 1])
        self.PS[r, 0] = 0
        np.cumsum(self.s[nodes], out=self.PS[r, 1 : L + 1])

    def _set_stats(self, r: int, load: int, dist: int, dur: int) -> None:
        self.load[r] = load
        self.dist[r] = dist
        self.dur[r] = dur

    def _set_empty(self, r: int) -> None:
        self._write_route(r, [0, self.sink])
        self._set_stats(r, 0, 0, 0)
        self.rmerit[r] = 0
        self.uhash[r] = 0
        self.thash[r] = 0

    def _spare_type(self) -> int:
        hybrids = int(np.count_nonzero(self.vtype[: self.n_routes] == HYBRID))
        return HYBRID if hybrids < self.m_hybrid else CONVENTIONAL

    def _ensure_spare(self) -> None:
        self._ensure_rows(self.n_routes + 1)
        if self.n_routes < self.m_total:
            self.n_slots = self.n_routes + 1
            self._set_empty(self.n_routes)
            self.vtype[self.n_routes] = self._spare_type()
        else:
            self.n_slots = self.n_routes

    def _remove_slot(self, r: int) -> None:
        last = self.n_routes
        # the shift reads row ``last``, which a just-filled spare may not have yet
        self._ensure_rows(last + 1)
        for arr in (self.seq, self.PD, self.PT, self.RD, self.RT, self.PQ, self.PS):
            arr[r:last] = arr[r + 1 : last + 1]
        for arr in (self.lens, self.load, self.dist, self.dur, self.vtype, self.rmerit, self.uhash, self.thash):
            arr[r:last] = arr[r + 1 : last + 1]
        self.n_routes -= 1

    # -- evaluation ------------------------------------------------------------

    def route_cost(self, dist: int, vtype: int) -> int:
        if vtype == CONVENTIONAL:
            return self.c0 * dist
        if dist <= self.DE:
            return self.ce * dist
        return self.ce * self.DE + self.cg * (dist - self.DE)

    def route_merit(self, n_cust: int, load: int, dist: int, dur: int, vtype: int) -> int:
        if n_cust == 0:
            return 0
        m = self.route_cost(dist, vtype)
        if load > self.Q:
            m += self.phiQ * (load - self.Q)
        if dur > self.Tmax:
            m += self.phiT * (dur - self.Tmax)
        return m

    def _recompute_totals(self) -> None:
        F = self.n_routes
        for r in range(F):
            self.rmerit[r] = self.route_merit(
                int(self.lens[r]) - 2, int(self.load[r]), int(self.dist[r]), int(self.dur[r]), int(self.vtype[r])
            )
            self.thash[r] = _typed(int(self.uhash[r]), int(self.vtype[r]))
        self.merit = int(sum(int(x) for x in self.rmerit[:F]))
        fp = 0
        for r in range(F):
            fp = (fp + int(self.thash[r])) & MASK
        self.fp = fp

    # -- construction-time edits ------------------------------------------------

    def route_nodes(self, r: int) -> list[int]:
        return self.seq[r, : int(self.lens[r])].tolist()

    def insert_customer(self, r: int, gap: int, customer: int) -> None:
        """Insert into slot r (possibly the spare) after position ``gap``."""
        nodes = self.route_nodes(r)
        was_empty = len(nodes) == 2
        nodes.insert(gap + 1, customer)
        self._write_route(r, nodes)
        self._set_stats(r, int(self.PQ[r, len(nodes)]), int(self.PD[r, len(nodes) - 1]),
                        int(self.PT[r, len(nodes) - 1] + self.PS[r, len(nodes)]))
        if was_empty:
            self.n_routes += 1
            self._ensure_spare()

    def remove_routes(self, slots: list[int]) -> list[int]:
        """Drop whole routes; returns their customers in route order."""
        freed = []
        for r in sorted(slots, reverse=True):
            freed.extend(self.route_nodes(r)[1:-1][::-1])
            self._remove_slot(r)
        self._ensure_spare()
        return freed[::-1]

    def finalize(self) -> None:
        """Reassign types, then refresh merit and fingerprint."""
        self.reassign_types()

    # -- moves -------------------------------------------------------------------

    def evaluate(self, kind: int, a: int, i: int, b: int, j: int):
        return kernels.move_delta(self, kind, a, i, b, j)

    def apply_move(self, kind: int, a: int, i: int, b: int, j: int) -> int:
        """Apply a move; returns its merit delta under the current types."""
        delta, la, da, ta, lb, db, tb = kernels.move_delta(self, kind, a, i, b, j)
        A = self.route_nodes(a)
        if is_intra(kind):
            newA, _ = apply_to_lists(kind, A, i, None, j)
            self._write_route(a, newA)
            self._set_stats(a, la, da, ta)
            touched = [a]
        else:
            B = self.route_nodes(b)
            newA, newB = apply_to_lists(kind, A, i, B, j)
            self._write_route(a, newA)
            self._write_route(b, newB)
            self._set_stats(a, la, da, ta)
            self._set_stats(b, lb, db, tb)
            touched = [a, b]
        old = sum(int(self.rmerit[r]) for r in touched)
        new = 0
        for r in touched:
            self.rmerit[r] = self.route_merit(
                int(self.lens[r]) - 2, int(self.load[r]), int(self.dist[r]), int(self.dur[r]), int(self.vtype[r])
            )
            old_t = int(self.thash[r])
            self.thash[r] = _typed(int(self.uhash[r]), int(self.vtype[r])) if self.lens[r] > 2 else 0
            self.fp = (self.fp - old_t + int(self.thash[r])) & MASK
            new += int(self.rmerit[r])
        self.merit += new - old
        spare_was = self.n_routes if self.n_slots > self.n_routes else None
        if spare_was is not None and spare_was in touched and self.lens[spare_was] > 2:
            self.n_routes += 1
        for r in sorted(touched, reverse=True):
            if r < self.n_routes and self.lens[r] == 2:
                self._remove_slot(r)
        self._ensure_spare()
        return delta

    def reassign_types(self) -> None:
        """Optimal vehicle types for the fixed route set.

        Per-route savings of a hybrid over a conventional vehicle are independent,
        so taking the largest savings first within the fleet limits is optimal.
        """
        F = self.n_routes
        m_conv = self.m_total - self.m_hybrid
        lo = max(0, F - m_conv)
        hi = min(F, self.m_hybrid)
        savings = [
            (self.route_cost(int(self.dist[r]), CONVENTIONAL) - self.route_cost(int(self.dist[r]), HYBRID), r)
            for r in range(F)
        ]
        savings.sort(key=lambda x: (-x[0], x[1]))
        for rank, (save, r) in enumerate(savings):
            hybrid = rank < lo or (rank < hi and save > 0)
            self.vtype[r] = HYBRID if hybrid else CONVENTIONAL
        if self.n_slots > F:
            self.vtype[F] = self._spare_type()
        self._recompute_totals()

    # -- import / export ---------------------------------------------------------

    @classmethod
    def from_solution(cls, sol: Solution, inst: Instance, params: MeritParams, reassign: bool = False):
        st = cls(inst, params)
        st.n_routes = 0
        needed = len(sol.routes) + 1
        st._ensure_rows(needed)
        for r, (route, vt) in enumerate(zip(sol.routes, sol.types)):
            st._write_route(r, [0, *route.customers, inst.sink])
            L = int(st.lens[r])
            st._set_stats(r, int(st.PQ[r, L]), int(st.PD[r, L - 1]), int(st.PT[r, L - 1] + st.PS[r, L]))
            st.vtype[r] = int(vt)
            st.n_routes += 1
        st._ensure_spare()
        if reassign:
            st.reassign_types()
        else:
            st._recompute_totals()
        return st

    def to_solution(self) -> Solution:
        routes = []
        types = []
        for r in range(self.n_routes):
            L = int(self.lens[r])
            routes.append(Route(tuple(self.seq[r, 1 : L - 1].tolist()), RouteStats(
                int(self.load[r]), int(self.dist[r]), int(self.dur[r]), max(int(self.dist[r]) - self.DE, 0))))
            types.append(VehicleType(int(self.vtype[r])))
        return Solution(tuple(routes), tuple(types))

    def copy(self) -> "SearchState":
        new = object.__new__(SearchState)
        new.__dict__.update(self.__dict__)
        for name in ("seq", "PD", "PT", "RD", "RT", "PQ", "PS", "lens", "load", "dist",
                     "dur", "vtype", "rmerit", "uhash", "thash"):
            setattr(new, name, getattr(self, name).copy())
        return new

    def is_feasible(self) -> bool:
        F = self.n_routes
        if (self.load[:F] > self.Q).any() or (self.dur[:F] > self.Tmax).any():
            return False
        if self.inst.cost.bev_mode:
            hyb = self.vtype[:F] == HYBRID
            if (self.dist[:F][hyb] > self.DE).any():
                return False
        return True
