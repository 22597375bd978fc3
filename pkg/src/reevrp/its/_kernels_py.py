"""Pure-Python move evaluation and insertion scoring.

Reference backend; ``_kernels.pyx`` must return identical results in the
same scan order.
"""
from __future__ import annotations

from ..fingerprint import MASK, mix64, SEED, TYPE_SALT
from .routeops import (
    INTER_EXCHANGE,
    INTER_RELOCATE,
    INTER_TWO_OPT,
    INTRA_EXCHANGE,
    INTRA_RELOCATE,
    INTRA_TWO_OPT,
    apply_to_lists,
    enumerate_moves,
    is_intra,
)

BACKEND = "python"


def _cost(st, dist, vtype):
    if vtype == 1:
        return st.c0 * dist
    if dist <= st.DE:
        return st.ce * dist
    return st.ce * st.DE + st.cg * (dist - st.DE)


def _merit(st, n_cust, load, dist, dur, vtype):
    if n_cust == 0:
        return 0
    m = _cost(st, dist, vtype)
    if load > st.Q:
        m += st.phiQ * (load - st.Q)
    if dur > st.Tmax:
        m += st.phiT * (dur - st.Tmax)
    return m


def _typed_hash(nodes, vtype):
    if len(nodes) <= 2:
        return 0
    h = SEED
    for v in nodes[1:-1]:
        h = mix64(h ^ (v + 1))
    return mix64(h ^ ((vtype + 1) * TYPE_SALT & MASK))


def move_stats(st, kind, a, i, b, j):
    """New (load, dist, dur, n_customers) of the touched routes, O(1)."""
    D, Tm, q, s = st.D, st.Tm, st.q, st.s
    A = st.seq[a]
    La = int(st.lens[a])
    la, da, ta = int(st.load[a]), int(st.dist[a]), int(st.dur[a])
    if kind == INTRA_RELOCATE:
        v = A[i]
        p, n_ = A[i - 1], A[i + 1]
        x, y = A[j], A[j + 1]
        dd = D[p, n_] - D[p, v] - D[v, n_] + D[x, v] + D[v, y] - D[x, y]
        dt = Tm[p, n_] - Tm[p, v] - Tm[v, n_] + Tm[x, v] + Tm[v, y] - Tm[x, y]
        return (la, da + int(dd), ta + int(dt), La - 2), None
    if kind == INTRA_EXCHANGE:
        u, w = A[i], A[j]
        p, n_ = A[i - 1], A[j + 1]
        if j == i + 1:
            dd = D[p, w] + D[w, u] + D[u, n_] - D[p, u] - D[u, w] - D[w, n_]
            dt = Tm[p, w] + Tm[w, u] + Tm[u, n_] - Tm[p, u] - Tm[u, w] - Tm[w, n_]
        else:
            ui, wj = A[i + 1], A[j - 1]
            dd = (D[p, w] + D[w, ui] + D[wj, u] + D[u, n_]
                  - D[p, u] - D[u, ui] - D[wj, w] - D[w, n_])
            dt = (Tm[p, w] + Tm[w, ui] + Tm[wj, u] + Tm[u, n_]
                  - Tm[p, u] - Tm[u, ui] - Tm[wj, w] - Tm[w, n_])
        return (la, da + int(dd), ta + int(dt), La - 2), None
    if kind == INTRA_TWO_OPT:
        PD, PT, RD, RT = st.PD[a], st.PT[a], st.RD[a], st.RT[a]
        p, u, w, n_ = A[i - 1], A[i], A[j], A[j + 1]
        dd = D[p, w] + (RD[j] - RD[i]) + D[u, n_] - D[p, u] - (PD[j] - PD[i]) - D[w, n_]
        dt = Tm[p, w] + (RT[j] - RT[i]) + Tm[u, n_] - Tm[p, u] - (PT[j] - PT[i]) - Tm[w, n_]
        return (la, da + int(dd), ta + int(dt), La - 2), None

    B = st.seq[b]
    Lb = int(st.lens[b])
    lb, db, tb = int(st.load[b]), int(st.dist[b]), int(st.dur[b])
    if kind == INTER_RELOCATE:
        v = A[i]
        p, n_ = A[i - 1], A[i + 1]
        if La == 3:
            new_a = (0, 0, 0, 0)
        else:
            new_a = (
                la - int(q[v]),
                da + int(D[p, n_] - D[p, v] - D[v, n_]),
                ta + int(Tm[p, n_] - Tm[p, v] - Tm[v, n_] - s[v]),
                La - 3,
            )
        x, y = B[j], B[j + 1]
        if Lb == 2:
            new_b = (int(q[v]), int(D[x, v] + D[v, y]), int(Tm[x, v] + Tm[v, y] + s[v]), 1)
        else:
            new_b = (
                lb + int(q[v]),
                db + int(D[x, v] + D[v, y] - D[x, y]),
                tb + int(Tm[x, v] + Tm[v, y] - Tm[x, y] + s[v]),
                Lb - 1,
            )
        return new_a, new_b
    if kind == INTER_EXCHANGE:
        u, w = A[i], B[j]
        pa, na = A[i - 1], A[i + 1]
        pb, nb = B[j - 1], B[j + 1]
        new_a = (
            la - int(q[u]) + int(q[w]),
            da + int(D[pa, w] + D[w, na] - D[pa, u] - D[u, na]),
            ta + int(Tm[pa, w] + Tm[w, na] - Tm[pa, u] - Tm[u, na] - s[u] + s[w]),
            La - 2,
        )
        new_b = (
            lb - int(q[w]) + int(q[u]),
            db + int(D[pb, u] + D[u, nb] - D[pb, w] - D[w, nb]),
            tb + int(Tm[pb, u] + Tm[u, nb] - Tm[pb, w] - Tm[w, nb] - s[w] + s[u]),
            Lb - 2,
        )
        return new_a, new_b
    if kind == INTER_TWO_OPT:
        PDa, PTa, PQa, PSa = st.PD[a], st.PT[a], st.PQ[a], st.PS[a]
        PDb, PTb, PQb, PSb = st.PD[b], st.PT[b], st.PQ[b], st.PS[b]
        ca = i + (Lb - 2 - j)
        cb = j + (La - 2 - i)
        if ca == 0:
            new_a = (0, 0, 0, 0)
        else:
            new_a = (
                int(PQa[i + 1] + PQb[Lb] - PQb[j + 1]),
                int(PDa[i] + D[A[i], B[j + 1]] + PDb[Lb - 1] - PDb[j + 1]),
                int(PTa[i] + Tm[A[i], B[j + 1]] + PTb[Lb - 1] - PTb[j + 1]
                    + PSa[i + 1] + PSb[Lb] - PSb[j + 1]),
                ca,
            )
        if cb == 0:
            new_b = (0, 0, 0, 0)
        else:
            new_b = (
                int(PQb[j + 1] + PQa[La] - PQa[i + 1]),
                int(PDb[j] + D[B[j], A[i + 1]] + PDa[La - 1] - PDa[i + 1]),
                int(PTb[j] + Tm[B[j], A[i + 1]] + PTa[La - 1] - PTa[i + 1]
                    + PSb[j + 1] + PSa[La] - PSa[i + 1]),
                cb,
            )
        return new_a, new_b
    raise ValueError(f"unknown move kind {kind}")


def move_delta(st, kind, a, i, b, j):
    """Merit delta and new stats ``(delta, la, da, ta, lb, db, tb)``."""
    new_a, new_b = move_stats(st, kind, a, i, b, j)
    va = int(st.vtype[a])
    delta = _merit(st, new_a[3], new_a[0], new_a[1], new_a[2], va) - int(st.rmerit[a])
    if new_b is None:
        return delta, new_a[0], new_a[1], new_a[2], 0, 0, 0
    vb = int(st.vtype[b])
    delta += _merit(st, new_b[3], new_b[0], new_b[1], new_b[2], vb) - int(st.rmerit[b])
    return delta, new_a[0], new_a[1], new_a[2], new_b[0], new_b[1], new_b[2]


def candidate_fingerprint(st, kind, a, i, b, j):
    A = st.seq[a, : int(st.lens[a])].tolist()
    va = int(st.vtype[a])
    fp = (st.fp - int(st.thash[a])) & MASK
    if is_intra(kind):
        newA, _ = apply_to_lists(kind, A, i, None, j)
        return (fp + _typed_hash(newA, va)) & MASK
    B = st.seq[b, : int(st.lens[b])].tolist()
    vb = int(st.vtype[b])
    fp = (fp - int(st.thash[b])) & MASK
    newA, newB = apply_to_lists(kind, A, i, B, j)
    return (fp + _typed_hash(newA, va) + _typed_hash(newB, vb)) & MASK


def scan(st, kind, tabu, aspiration):
    """First non-tabu improving move of one neighborhood, else the best
    non-tabu non-improving one; ``None`` when every move is tabu.

    Returns ``(kind, a, i, b, j, delta, fingerprint)``.
    """
    tabu = {int(x) for x in tabu}
    lens = [int(x) for x in st.lens[: st.n_slots]]
    best = None
    best_delta = None
    for a, i, b, j in enumerate_moves(kind, lens, st.n_routes, st.n_slots):
        delta = move_delta(st, kind, a, i, b, j)[0]
        if delta < 0:
            fp = candidate_fingerprint(st, kind, a, i, b, j)
            if fp not in tabu or st.merit + delta < aspiration:
                return kind, a, i, b, j, delta, fp
        elif best_delta is None or delta < best_delta:
            fp = candidate_fingerprint(st, kind, a, i, b, j)
            if fp not in tabu:
                best = (kind, a, i, b, j, delta, fp)
                best_delta = delta
    return best


def _insertion(st, r, u):
    """Yield (gap, new_load, new_dist, new_dur) for every insertion of u into r."""
    A = st.seq[r]
    L = int(st.lens[r])
    D, Tm = st.D, st.Tm
    if L == 2:
        yield 0, int(st.q[u]), int(D[A[0], u] + D[u, A[1]]), int(Tm[A[0], u] + Tm[u, A[1]] + st.s[u])
        return
    load = int(st.load[r]) + int(st.q[u])
    dist = int(st.dist[r])
    dur = int(st.dur[r]) + int(st.s[u])
    for g in range(L - 1):
        x, y = A[g], A[g + 1]
        yield g, load, dist + int(D[x, u] + D[u, y] - D[x, y]), dur + int(Tm[x, u] + Tm[u, y] - Tm[x, y])


def insertion_scores(st, r, cand, w_cost, w_cap, w_dur):
    """Best feasible insertion position and greedy score per candidate.

    Returns lists ``(pos, score)``; ``pos == -1`` marks customers with no
    feasible position in route ``r``.
    """
    vt = int(st.vtype[r])
    base = _cost(st, int(st.dist[r]), vt) if int(st.lens[r]) > 2 else 0
    bev = st.inst.cost.bev_mode and vt == 0
    Q, T = st.Q, st.Tmax
    feasible = []
    max_cost = 0
    for u in cand:
        opts = []
        for g, ld, dd, tt in _insertion(st, r, int(u)):
            if ld > Q or tt > T or (bev and dd > st.DE):
                continue
            c = _cost(st, dd, vt) - base
            if c > max_cost:
                max_cost = c
            opts.append((g, ld, tt, c))
        feasible.append(opts)
    norm = float(max_cost) if max_cost > 0 else 1.0
    pos = []
    score = []
    for opts in feasible:
        best_g, best_s = -1, 0.0
        for g, ld, tt, c in opts:
            sc = w_cost * (c / norm) + w_cap * ((Q - ld) / Q) + w_dur * ((T - tt) / T)
            if best_g < 0 or sc < best_s:
                best_g, best_s = g, sc
        pos.append(best_g)
        score.append(best_s)
    return pos, score


def leftover_choice(st, u, w_cost, w_cap, w_dur, include_spare):
    """Route and gap minimizing the weighted cost/violation sum for customer u."""
    slots = st.n_slots if include_spare else st.n_routes
    Q, T = st.Q, st.Tmax
    opts = []
    max_cost = 0
    for r in range(slots):
        vt = int(st.vtype[r])
        base = _cost(st, int(st.dist[r]), vt) if int(st.lens[r]) > 2 else 0
        for g, ld, dd, tt in _insertion(st, r, int(u)):
            c = _cost(st, dd, vt) - base
            if c > max_cost:
                max_cost = c
            opts.append((r, g, c, max(ld - Q, 0), max(tt - T, 0)))
    norm = float(max_cost) if max_cost > 0 else 1.0
    best = None
    best_s = 0.0
    for r, g, c, vq, vt_ in opts:
        sc = w_cost * (c / norm) + w_cap * (vq / Q) + w_dur * (vt_ / T)
        if best is None or sc < best_s:
            best, best_s = (r, g), sc
    return best
