"""64-bit fingerprints of canonical solutions.

A route hashes its customer sequence in travel order; the pair (route, type)
is mixed once more and the solution fingerprint is the wrapping sum over its
non-empty routes, so it does not depend on route order. The compiled kernel
reproduces these exact functions.
"""
from __future__ import annotations

from typing import Iterable

MASK = (1 << 64) - 1
SEED = 0x9E3779B97F4A7C15
TYPE_SALT = 0xD6E8FEB86659FD93


def mix64(x: int) -> int:
    x &= MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK
    return x ^ (x >> 31)


def route_hash(customers: Iterable[int]) -> int:
    h = SEED
    for v in customers:
        h = mix64(h ^ (int(v) + 1))
    return h


def typed_route_hash(customers: Iterable[int], vtype: int) -> int:
    return mix64(route_hash(customers) ^ ((int(vtype) + 1) * TYPE_SALT & MASK))


def solution_fingerprint(pairs: Iterable[tuple[Iterable[int], int]]) -> int:
    total = 0
    for customers, vtype in pairs:
        customers = tuple(customers)
        if customers:
            total = (total + typed_route_hash(customers, vtype)) & MASK
    return total
