"""Neighborhood definitions shared by both kernel backends.

Routes are full node lists ``[0, v1, ..., vl, n+1]``. Positions index into
these lists. A gap ``g`` means "between node g and node g+1".
"""
from __future__ import annotations

INTRA_RELOCATE = 0
INTRA_EXCHANGE = 1
INTRA_TWO_OPT = 2
INTER_RELOCATE = 3
INTER_EXCHANGE = 4
INTER_TWO_OPT = 5

NEIGHBORHOODS = (
    INTRA_RELOCATE,
    INTRA_EXCHANGE,
    INTRA_TWO_OPT,
    INTER_RELOCATE,
    INTER_EXCHANGE,
    INTER_TWO_OPT,
)
NAMES = {
    INTRA_RELOCATE: "intra-relocate",
    INTRA_EXCHANGE: "intra-exchange",
    INTRA_TWO_OPT: "intra-2opt",
    INTER_RELOCATE: "inter-relocate",
    INTER_EXCHANGE: "inter-exchange",
    INTER_TWO_OPT: "inter-2opt*",
}


def is_intra(kind: int) -> bool:
    return kind <= INTRA_TWO_OPT


def apply_to_lists(kind: int, A: list, i: int, B: list | None, j: int) -> tuple[list, list | None]:
    """Return the new node lists of the routes touched by a move."""
    if kind == INTRA_RELOCATE:
        v = A[i]
        if j < i:
            return A[: j + 1] + [v] + A[j + 1 : i] + A[i + 1 :], None
        return A[:i] + A[i + 1 : j + 1] + [v] + A[j + 1 :], None
    if kind == INTRA_EXCHANGE:
        new = list(A)
        new[i], new[j] = new[j], new[i]
        return new, None
    if kind == INTRA_TWO_OPT:
        return A[:i] + A[i : j + 1][::-1] + A[j + 1 :], None
    if kind == INTER_RELOCATE:
        return A[:i] + A[i + 1 :], B[: j + 1] + [A[i]] + B[j + 1 :]
    if kind == INTER_EXCHANGE:
        na, nb = list(A), list(B)
        na[i], nb[j] = B[j], A[i]
        return na, nb
    if kind == INTER_TWO_OPT:
        return A[: i + 1] + B[j + 1 :], B[: j + 1] + A[i + 1 :]
    raise ValueError(f"unknown move kind {kind}")


def enumerate_moves(kind: int, lens: list[int], n_routes: int, n_slots: int):
    """Yield (a, i, b, j) in the lexicographic scan order of one neighborhood.

    ``lens`` holds node counts (depots included); slots ``n_routes..n_slots-1``
    hold at most one empty spare route.
    """
    if kind == INTRA_RELOCATE:
        for a in range(n_routes):
            La = lens[a]
            for i in range(1, La - 1):
                for g in range(0, La - 1):
                    if g != i and g != i - 1:
                        yield a, i, a, g
    elif kind in (INTRA_EXCHANGE, INTRA_TWO_OPT):
        for a in range(n_routes):
            La = lens[a]
            for i in range(1, La - 2):
                for j in range(i + 1, La - 1):
                    yield a, i, a, j
    elif kind == INTER_RELOCATE:
        for a in range(n_routes):
            La = lens[a]
            for i in range(1, La - 1):
                for b in range(n_slots):
                    if b == a:
                        continue
                    for g in range(0, lens[b] - 1):
                        yield a, i, b, g
    elif kind == INTER_EXCHANGE:
        for a in range(n_routes):
            La = lens[a]
            for i in range(1, La - 1):
                for b in range(a + 1, n_routes):
                    for j in range(1, lens[b] - 1):
                        yield a, i, b, j
    elif kind == INTER_TWO_OPT:
        for a in range(n_routes):
            La = lens[a]
            for i in range(0, La - 1):
                for b in range(a + 1, n_slots):
                    Lb = lens[b]
                    for j in range(0, Lb - 1):
                        if (i == 0 and j == 0) or (i == La - 2 and j == Lb - 2):
                            continue
                        yield a, i, b, j
    else:
        raise ValueError(f"unknown neighborhood {kind}")
