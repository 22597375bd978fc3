# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled move evaluation and insertion scoring.

Mirrors ``_kernels_py`` exactly: same scan order, same integer arithmetic,
same floating-point expression order for the greedy scores.
"""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t, uint64_t

cnp.import_array()

BACKEND = "cython"

cdef enum:
    INTRA_RELOCATE = 0
    INTRA_EXCHANGE = 1
    INTRA_TWO_OPT = 2
    INTER_RELOCATE = 3
    INTER_EXCHANGE = 4
    INTER_TWO_OPT = 5

cdef uint64_t SEED = 0x9E3779B97F4A7C15ULL
cdef uint64_t TYPE_SALT = 0xD6E8FEB86659FD93ULL


cdef inline uint64_t mix64(uint64_t x) nogil:
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL
    return x ^ (x >> 31)


cdef struct Params:
    int64_t Q, Tmax, DE, ce, cg, c0, phiQ, phiT


cdef struct NewStats:
    int64_t la, da, ta, ca, lb, db, tb, cb


cdef inline int64_t route_cost(Params* p, int64_t dist, int64_t vt) nogil:
    if vt == 1:
        return p.c0 * dist
    if dist <= p.DE:
        return p.ce * dist
    return p.ce * p.DE + p.cg * (dist - p.DE)


cdef inline int64_t route_merit(Params* p, int64_t n_cust, int64_t load, int64_t dist,
                                int64_t dur, int64_t vt) nogil:
    cdef int64_t m
    if n_cust == 0:
        return 0
    m = route_cost(p, dist, vt)
    if load > p.Q:
        m += p.phiQ * (load - p.Q)
    if dur > p.Tmax:
        m += p.phiT * (dur - p.Tmax)
    return m


cdef class _View:
    cdef const int64_t[:, ::1] D, Tm
    cdef int64_t[:, ::1] seq, PD, PT, RD, RT, PQ, PS
    cdef const int64_t[::1] q, s
    cdef int64_t[::1] lens, load, dist, dur, vtype, rmerit
    cdef uint64_t[::1] thash
    cdef Params p
    cdef int64_t n_routes, n_slots, merit
    cdef uint64_t fp
    cdef int64_t[::1] bufA, bufB

    def __init__(self, st):
        self.D = st.D
        self.Tm = st.Tm
        self.seq = st.seq
        self.PD = st.PD
        self.PT = st.PT
        self.RD = st.RD
        self.RT = st.RT
        self.PQ = st.PQ
        self.PS = st.PS
        self.q = st.q
        self.s = st.s
        self.lens = st.lens
        self.load = st.load
        self.dist = st.dist
        self.dur = st.dur
        self.vtype = st.vtype
        self.rmerit = st.rmerit
        self.thash = st.thash
        self.p.Q = st.Q
        self.p.Tmax = st.Tmax
        self.p.DE = st.DE
        self.p.ce = st.ce
        self.p.cg = st.cg
        self.p.c0 = st.c0
        self.p.phiQ = st.phiQ
        self.p.phiT = st.phiT
        self.n_routes = st.n_routes
        self.n_slots = st.n_slots
        self.merit = st.merit
        self.fp = st.fp
        width = st.seq.shape[1] * 2 + 2
        self.bufA = np.empty(width, dtype=np.int64)
        self.bufB = np.empty(width, dtype=np.int64)

    cdef NewStats stats(self, int kind, Py_ssize_t a, Py_ssize_t i, Py_ssize_t b, Py_ssize_t j) nogil:
        cdef NewStats r
        cdef const int64_t[:, ::1] D = self.D
        cdef const int64_t[:, ::1] Tm = self.Tm
        cdef Py_ssize_t La = self.lens[a]
        cdef Py_ssize_t Lb
        cdef int64_t v, pr, nx, x, y, u, w, ui, wj, pa, na, pb, nb
        cdef int64_t la = self.load[a], da = self.dist[a], ta = self.dur[a]
        cdef int64_t lb, db, tb
        r.lb = 0
        r.db = 0
        r.tb = 0
        r.cb = 0
        if kind == INTRA_RELOCATE:
            v = self.seq[a, i]
            pr = self.seq[a, i - 1]
            nx = self.seq[a, i + 1]
            x = self.seq[a, j]
            y = self.seq[a, j + 1]
            r.la = la
            r.da = da + (D[pr, nx] - D[pr, v] - D[v, nx] + D[x, v] + D[v, y] - D[x, y])
            r.ta = ta + (Tm[pr, nx] - Tm[pr, v] - Tm[v, nx] + Tm[x, v] + Tm[v, y] - Tm[x, y])
            r.ca = La - 2
            return r
        if kind == INTRA_EXCHANGE:
            u = self.seq[a, i]
            w = self.seq[a, j]
            pr = self.seq[a, i - 1]
            nx = self.seq[a, j + 1]
            r.la = la
            r.ca = La - 2
            if j == i + 1:
                r.da = da + (D[pr, w] + D[w, u] + D[u, nx] - D[pr, u] - D[u, w] - D[w, nx])
                r.ta = ta + (Tm[pr, w] + Tm[w, u] + Tm[u, nx] - Tm[pr, u] - Tm[u, w] - Tm[w, nx])
            else:
                ui = self.seq[a, i + 1]
                wj = self.seq[a, j - 1]
                r.da = da + (D[pr, w] + D[w, ui] + D[wj, u] + D[u, nx]
                             - D[pr, u] - D[u, ui] - D[wj, w] - D[w, nx])
                r.ta = ta + (Tm[pr, w] + Tm[w, ui] + Tm[wj, u] + Tm[u, nx]
                             - Tm[pr, u] - Tm[u, ui] - Tm[wj, w] - Tm[w, nx])
            return r
        if kind == INTRA_TWO_OPT:
            pr = self.seq[a, i - 1]
            u = self.seq[a, i]
            w = self.seq[a, j]
            nx = self.seq[a, j + 1]
            r.la = la
            r.ca = La - 2
            r.da = da + (D[pr, w] + (self.RD[a, j] - self.RD[a, i]) + D[u, nx]
                         - D[pr, u] - (self.PD[a, j] - self.PD[a, i]) - D[w, nx])
            r.ta = ta + (Tm[pr, w] + (self.RT[a, j] - self.RT[a, i]) + Tm[u, nx]
                         - Tm[pr, u] - (self.PT[a, j] - self.PT[a, i]) - Tm[w, nx])
            return r

        Lb = self.lens[b]
        lb = self.load[b]
        db = self.dist[b]
        tb = self.dur[b]
        if kind == INTER_RELOCATE:
            v = self.seq[a, i]
            pr = self.seq[a, i - 1]
            nx = self.seq[a, i + 1]
            if La == 3:
                r.la = 0
                r.da = 0
                r.ta = 0
                r.ca = 0
            else:
                r.la = la - self.q[v]
                r.da = da + (D[pr, nx] - D[pr, v] - D[v, nx])
                r.ta = ta + (Tm[pr, nx] - Tm[pr, v] - Tm[v, nx] - self.s[v])
                r.ca = La - 3
            x = self.seq[b, j]
            y = self.seq[b, j + 1]
            if Lb == 2:
                r.lb = self.q[v]
                r.db = D[x, v] + D[v, y]
                r.tb = Tm[x, v] + Tm[v, y] + self.s[v]
                r.cb = 1
            else:
                r.lb = lb + self.q[v]
                r.db = db + (D[x, v] + D[v, y] - D[x, y])
                r.tb = tb + (Tm[x, v] + Tm[v, y] - Tm[x, y] + self.s[v])
                r.cb = Lb - 1
            return r
        if kind == INTER_EXCHANGE:
            u = self.seq[a, i]
            w = self.seq[b, j]
            pa = self.seq[a, i - 1]
            na = self.seq[a, i + 1]
            pb = self.seq[b, j - 1]
            nb = self.seq[b, j + 1]
            r.la = la - self.q[u] + self.q[w]
            r.da = da + (D[pa, w] + D[w, na] - D[pa, u] - D[u, na])
            r.ta = ta + (Tm[pa, w] + Tm[w, na] - Tm[pa, u] - Tm[u, na] - self.s[u] + self.s[w])
            r.ca = La - 2
            r.lb = lb - self.q[w] + self.q[u]
            r.db = db + (D[pb, u] + D[u, nb] - D[pb, w] - D[w, nb])
            r.tb = tb + (Tm[pb, u] + Tm[u, nb] - Tm[pb, w] - Tm[w, nb] - self.s[w] + self.s[u])
            r.cb = Lb - 2
            return r
        # INTER_TWO_OPT
        r.ca = i + (Lb - 2 - j)
        r.cb = j + (La - 2 - i)
        if r.ca == 0:
            r.la = 0
            r.da = 0
            r.ta = 0
        else:
            r.la = self.PQ[a, i + 1] + self.PQ[b, Lb] - self.PQ[b, j + 1]
            r.da = self.PD[a, i] + D[self.seq[a, i], self.seq[b, j + 1]] + self.PD[b, Lb - 1] - self.PD[b, j + 1]
            r.ta = (self.PT[a, i] + Tm[self.seq[a, i], self.seq[b, j + 1]] + self.PT[b, Lb - 1] - self.PT[b, j + 1]
                    + self.PS[a, i + 1] + self.PS[b, Lb] - self.PS[b, j + 1])
        if r.cb == 0:
            r.lb = 0
            r.db = 0
            r.tb = 0
        else:
            r.lb = self.PQ[b, j + 1] + self.PQ[a, La] - self.PQ[a, i + 1]
            r.db = self.PD[b, j] + D[self.seq[b, j], self.seq[a, i + 1]] + self.PD[a, La - 1] - self.PD[a, i + 1]
            r.tb = (self.PT[b, j] + Tm[self.seq[b, j], self.seq[a, i + 1]] + self.PT[a, La - 1] - self.PT[a, i + 1]
                    + self.PS[b, j + 1] + self.PS[a, La] - self.PS[a, i + 1])
        return r

    cdef int64_t delta(self, int kind, Py_ssize_t a, Py_ssize_t i, Py_ssize_t b, Py_ssize_t j, NewStats* out) nogil:
        cdef NewStats r = self.stats(kind, a, i, b, j)
        cdef int64_t d
        out[0] = r
        d = route_merit(&self.p, r.ca, r.la, r.da, r.ta, self.vtype[a]) - self.rmerit[a]
        if kind >= INTER_RELOCATE:
            d += route_merit(&self.p, r.cb, r.lb, r.db, r.tb, self.vtype[b]) - self.rmerit[b]
        return d

    cdef Py_ssize_t build(self, int kind, Py_ssize_t a, Py_ssize_t i, Py_ssize_t b, Py_ssize_t j,
                          Py_ssize_t* lenB) nogil:
        """Write the new node lists of the touched routes into bufA/bufB."""
        cdef Py_ssize_t La = self.lens[a]
        cdef Py_ssize_t Lb = 0
        cdef Py_ssize_t k, n = 0, m = 0
        cdef int64_t v
        if kind >= INTER_RELOCATE:
            Lb = self.lens[b]
        if kind == INTRA_RELOCATE:
            v = self.seq[a, i]
            if j < i:
                for k in range(0, j + 1):
                    self.bufA[n] = self.seq[a, k]; n += 1
                self.bufA[n] = v; n += 1
                for k in range(j + 1, i):
                    self.bufA[n] = self.seq[a, k]; n += 1
                for k in range(i + 1, La):
                    self.bufA[n] = self.seq[a, k]; n += 1
            else:
                for k in range(0, i):
                    self.bufA[n] = self.seq[a, k]; n += 1
                for k in range(i + 1, j + 1):
                    self.bufA[n] = self.seq[a, k]; n += 1
                self.bufA[n] = v; n += 1
                for k in range(j + 1, La):
                    self.bufA[n] = self.seq[a, k]; n += 1
        elif kind == INTRA_EXCHANGE:
            for k in range(La):
                self.bufA[k] = self.seq[a, k]
            self.bufA[i] = self.seq[a, j]
            self.bufA[j] = self.seq[a, i]
            n = La
        elif kind == INTRA_TWO_OPT:
            for k in range(0, i):
                self.bufA[n] = self.seq[a, k]; n += 1
            k = j
            while k >= i:
                self.bufA[n] = self.seq[a, k]; n += 1
                k -= 1
            for k in range(j + 1, La):
                self.bufA[n] = self.seq[a, k]; n += 1
        elif kind == INTER_RELOCATE:
            for k in range(La):
                if k != i:
                    self.bufA[n] = self.seq[a, k]; n += 1
            for k in range(0, j + 1):
                self.bufB[m] = self.seq[b, k]; m += 1
            self.bufB[m] = self.seq[a, i]; m += 1
            for k in range(j + 1, Lb):
                self.bufB[m] = self.seq[b, k]; m += 1
        elif kind == INTER_EXCHANGE:
            for k in range(La):
                self.bufA[k] = self.seq[a, k]
            for k in range(Lb):
                self.bufB[k] = self.seq[b, k]
            self.bufA[i] = self.seq[b, j]
            self.bufB[j] = self.seq[a, i]
            n = La
            m = Lb
        else:
            for k in range(0, i + 1):
                self.bufA[n] = self.seq[a, k]; n += 1
            for k in range(j + 1, Lb):
                self.bufA[n] = self.seq[b, k]; n += 1
            for k in range(0, j + 1):
                self.bufB[m] = self.seq[b, k]; m += 1
            for k in range(i + 1, La):
                self.bufB[m] = self.seq[a, k]; m += 1
        lenB[0] = m
        return n

    cdef uint64_t typed_hash(self, int64_t[::1] buf, Py_ssize_t n, int64_t vt) nogil:
        cdef uint64_t h = SEED
        cdef Py_ssize_t k
        if n <= 2:
            return 0
        for k in range(1, n - 1):
            h = mix64(h ^ <uint64_t>(buf[k] + 1))
        return mix64(h ^ (<uint64_t>(vt + 1) * TYPE_SALT))

    cdef uint64_t candidate_fp(self, int kind, Py_ssize_t a, Py_ssize_t i, Py_ssize_t b, Py_ssize_t j) nogil:
        cdef Py_ssize_t nb = 0
        cdef Py_ssize_t na = self.build(kind, a, i, b, j, &nb)
        cdef uint64_t fp = self.fp - self.thash[a] + self.typed_hash(self.bufA, na, self.vtype[a])
        if kind >= INTER_RELOCATE:
            fp = fp - self.thash[b] + self.typed_hash(self.bufB, nb, self.vtype[b])
        return fp


cdef inline bint in_tabu(uint64_t[::1] tabu, uint64_t fp) nogil:
    cdef Py_ssize_t k
    for k in range(tabu.shape[0]):
        if tabu[k] == fp:
            return True
    return False


def move_delta(st, int kind, Py_ssize_t a, Py_ssize_t i, Py_ssize_t b, Py_ssize_t j):
    cdef _View v = _View(st)
    cdef NewStats r
    cdef int64_t d = v.delta(kind, a, i, b, j, &r)
    if kind < INTER_RELOCATE:
        return d, r.la, r.da, r.ta, 0, 0, 0
    return d, r.la, r.da, r.ta, r.lb, r.db, r.tb


def candidate_fingerprint(st, int kind, Py_ssize_t a, Py_ssize_t i, Py_ssize_t b, Py_ssize_t j):
    cdef _View v = _View(st)
    return v.candidate_fp(kind, a, i, b, j)


cdef class _Scan:
    cdef _View v
    cdef uint64_t[::1] tabu
    cdef int64_t aspiration
    cdef public bint found_improving
    cdef public bint have_best
    cdef public int64_t best_delta
    cdef public Py_ssize_t ba, bi, bb, bj
    cdef public uint64_t bfp

    def __init__(self, _View v, uint64_t[::1] tabu, int64_t aspiration):
        self.v = v
        self.tabu = tabu
        self.aspiration = aspiration
        self.found_improving = False
        self.have_best = False

    cdef inline bint visit(self, int kind, Py_ssize_t a, Py_ssize_t i, Py_ssize_t b, Py_ssize_t j) nogil:
        """Returns True when the scan should stop (first improvement found)."""
        cdef NewStats r
        cdef int64_t d = self.v.delta(kind, a, i, b, j, &r)
        cdef uint64_t fp
        if d < 0:
            fp = self.v.candidate_fp(kind, a, i, b, j)
            if not in_tabu(self.tabu, fp) or self.v.merit + d < self.aspiration:
                self.found_improving = True
                self.have_best = True
                self.best_delta = d
                self.ba = a; self.bi = i; self.bb = b; self.bj = j
                self.bfp = fp
                return True
        elif not self.have_best or d < self.best_delta:
            fp = self.v.candidate_fp(kind, a, i, b, j)
            if not in_tabu(self.tabu, fp):
                self.have_best = True
                self.best_delta = d
                self.ba = a; self.bi = i; self.bb = b; self.bj = j
                self.bfp = fp
        return False

    cdef void run(self, int kind) nogil:
        cdef Py_ssize_t a, i, b, j, g, La, Lb
        cdef Py_ssize_t F = self.v.n_routes, S = self.v.n_slots
        if kind == INTRA_RELOCATE:
            for a in range(F):
                La = self.v.lens[a]
                for i in range(1, La - 1):
                    for g in range(0, La - 1):
                        if g != i and g != i - 1:
                            if self.visit(kind, a, i, a, g):
                                return
        elif kind == INTRA_EXCHANGE or kind == INTRA_TWO_OPT:
            for a in range(F):
                La = self.v.lens[a]
                for i in range(1, La - 2):
                    for j in range(i + 1, La - 1):
                        if self.visit(kind, a, i, a, j):
                            return
        elif kind == INTER_RELOCATE:
            for a in range(F):
                La = self.v.lens[a]
                for i in range(1, La - 1):
                    for b in range(S):
                        if b == a:
                            continue
                        Lb = self.v.lens[b]
                        for g in range(0, Lb - 1):
                            if self.visit(kind, a, i, b, g):
                                return
        elif kind == INTER_EXCHANGE:
            for a in range(F):
                La = self.v.lens[a]
                for i in range(1, La - 1):
                    for b in range(a + 1, F):
                        Lb = self.v.lens[b]
                        for j in range(1, Lb - 1):
                            if self.visit(kind, a, i, b, j):
                                return
        else:
            for a in range(F):
                La = self.v.lens[a]
                for i in range(0, La - 1):
                    for b in range(a + 1, S):
                        Lb = self.v.lens[b]
                        for j in range(0, Lb - 1):
                            if (i == 0 and j == 0) or (i == La - 2 and j == Lb - 2):
                                continue
                            if self.visit(kind, a, i, b, j):
                                return


def scan(st, int kind, tabu, aspiration):
    cdef _View v = _View(st)
    cdef uint64_t[::1] tb = np.ascontiguousarray(np.asarray(list(tabu), dtype=np.uint64))
    cdef _Scan sc = _Scan(v, tb, aspiration)
    with nogil:
        sc.run(kind)
    if not sc.have_best:
        return None
    return kind, sc.ba, sc.bi, sc.bb, sc.bj, sc.best_delta, sc.bfp


cdef inline void insertion(_View v, Py_ssize_t r, Py_ssize_t g, int64_t u,
                           int64_t* ld, int64_t* dd, int64_t* tt) nogil:
    cdef Py_ssize_t L = v.lens[r]
    cdef int64_t x = v.seq[r, g]
    cdef int64_t y = v.seq[r, g + 1]
    if L == 2:
        ld[0] = v.q[u]
        dd[0] = v.D[x, u] + v.D[u, y]
        tt[0] = v.Tm[x, u] + v.Tm[u, y] + v.s[u]
    else:
        ld[0] = v.load[r] + v.q[u]
        dd[0] = v.dist[r] + (v.D[x, u] + v.D[u, y] - v.D[x, y])
        tt[0] = v.dur[r] + v.s[u] + (v.Tm[x, u] + v.Tm[u, y] - v.Tm[x, y])


def insertion_scores(st, Py_ssize_t r, cand, double w_cost, double w_cap, double w_dur):
    cdef _View v = _View(st)
    cdef int64_t[::1] cs = np.ascontiguousarray(np.asarray(cand, dtype=np.int64))
    cdef Py_ssize_t nc = cs.shape[0]
    cdef Py_ssize_t L = v.lens[r]
    cdef int64_t vt = v.vtype[r]
    cdef bint bev = bool(st.inst.cost.bev_mode) and vt == 0
    cdef int64_t base = route_cost(&v.p, v.dist[r], vt) if L > 2 else 0
    cdef int64_t Q = v.p.Q, T = v.p.Tmax
    cdef int64_t max_cost = 0, c, ld, dd, tt, u
    cdef Py_ssize_t k, g, best_g
    cdef double norm, sc, best_s
    pos_arr = np.full(nc, -1, dtype=np.int64)
    score_arr = np.zeros(nc, dtype=np.float64)
    cdef int64_t[::1] pos = pos_arr
    cdef double[::1] score = score_arr
    with nogil:
        for k in range(nc):
            u = cs[k]
            for g in range(L - 1):
                insertion(v, r, g, u, &ld, &dd, &tt)
                if ld > Q or tt > T or (bev and dd > v.p.DE):
                    continue
                c = route_cost(&v.p, dd, vt) - base
                if c > max_cost:
                    max_cost = c
        norm = <double>max_cost if max_cost > 0 else 1.0
        for k in range(nc):
            u = cs[k]
            best_g = -1
            best_s = 0.0
            for g in range(L - 1):
                insertion(v, r, g, u, &ld, &dd, &tt)
                if ld > Q or tt > T or (bev and dd > v.p.DE):
                    continue
                c = route_cost(&v.p, dd, vt) - base
                sc = w_cost * (<double>c / norm) + w_cap * (<double>(Q - ld) / <double>Q) + w_dur * (<double>(T - tt) / <double>T)
                if best_g < 0 or sc < best_s:
                    best_g = g
                    best_s = sc
            pos[k] = best_g
            score[k] = best_s
    return pos_arr.tolist(), score_arr.tolist()


def leftover_choice(st, int64_t u, double w_cost, double w_cap, double w_dur, bint include_spare):
    cdef _View v = _View(st)
    cdef Py_ssize_t slots = v.n_slots if include_spare else v.n_routes
    cdef int64_t Q = v.p.Q, T = v.p.Tmax
    cdef int64_t max_cost = 0, c, ld, dd, tt, vt, base
    cdef Py_ssize_t r, g, L, br = -1, bg = -1
    cdef double norm, sc, best_s = 0.0
    for r in range(slots):
        vt = v.vtype[r]
        L = v.lens[r]
        base = route_cost(&v.p, v.dist[r], vt) if L > 2 else 0
        for g in range(L - 1):
            insertion(v, r, g, u, &ld, &dd, &tt)
            c = route_cost(&v.p, dd, vt) - base
            if c > max_cost:
                max_cost = c
    norm = <double>max_cost if max_cost > 0 else 1.0
    for r in range(slots):
        vt = v.vtype[r]
        L = v.lens[r]
        base = route_cost(&v.p, v.dist[r], vt) if L > 2 else 0
        for g in range(L - 1):
            insertion(v, r, g, u, &ld, &dd, &tt)
            c = route_cost(&v.p, dd, vt) - base
            sc = (w_cost * (<double>c / norm)
                  + w_cap * (<double>(ld - Q if ld > Q else 0) / <double>Q)
                  + w_dur * (<double>(tt - T if tt > T else 0) / <double>T))
            if br < 0 or sc < best_s:
                br = r
                bg = g
                best_s = sc
    if br < 0:
        return None
    return br, bg
