from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..model import Instance


@dataclass(frozen=True)
class ItsParams:
    """User parameters of the iterated tabu search.

    ``perturb`` is a distance threshold in centimiles; ``None`` means 0.6 times
    the largest customer-to-customer distance. The search stops at
    ``time_limit`` seconds or after ``max_iterations`` tabu-search runs,
    whichever comes first; leave ``time_limit`` unset for bit-reproducible runs.
    """

    rcl: int = 3
    tenure: int = 20
    maxiter: int = 100
    restart: int = 5
    perturb: int | None = None
    time_limit: float | None = 600.0
    max_iterations: int | None = None
    rng_seed: int = 0

    def __post_init__(self):
        for name in ("rcl", "tenure", "maxiter", "restart"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.perturb is not None and self.perturb <= 0:
            raise ValueError("perturb must be positive")
        if self.time_limit is None and self.max_iterations is None:
            raise ValueError("set time_limit or max_iterations")

    def perturb_threshold(self, inst: Instance) -> int:
        if self.perturb is not None:
            return self.perturb
        return default_perturb(inst)


def default_perturb(inst: Instance) -> int:
    if inst.n < 2:
        return 1
    block = inst.dist[1 : inst.n + 1, 1 : inst.n + 1]
    return max(int(0.6 * int(block.max())), 1)


def rng_for(params: ItsParams) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(params.rng_seed))
