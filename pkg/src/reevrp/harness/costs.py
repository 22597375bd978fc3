"""Per-mile operating costs from energy prices and consumption rates."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from ..model import CostModel, ReevrpError


class CostOrderingViolated(ReevrpError):
    pass


@dataclass(frozen=True)
class CostInputs:
    c_E: str  # USD per kWh
    mu_E: str  # kWh per mile
    c_G: str  # USD per gasoline gallon equivalent
    mu_G: str  # miles per GGE
    c_D: str  # USD per diesel gallon
    mu_D: str  # miles per gallon

    def rates(self) -> tuple[Fraction, Fraction, Fraction]:
        """Exact USD-per-mile rates for EV mode, extender mode and diesel."""
        vals = [Fraction(str(v)) for v in (self.c_E, self.mu_E, self.c_G, self.mu_G, self.c_D, self.mu_D)]
        if any(v <= 0 for v in vals):
            raise ValueError("cost inputs must be positive")
        c_E, mu_E, c_G, mu_G, c_D, mu_D = vals
        return c_E * mu_E, c_G / mu_G, c_D / mu_D


# Reference prices and consumption for a CNG range-extended delivery truck
# and a diesel truck.
BASELINE_COST_INPUTS = CostInputs("0.0990", "1.14", "2.22", "10.1", "3.36", "9.0")


def _micro(x: Fraction) -> int:
    return round(x * 10**6)


def derive_costs(ci: CostInputs = BASELINE_COST_INPUTS, bev_mode: bool = False) -> CostModel:
    """Mileage costs rounded to whole micro-USD per mile (half to even)."""
    c_e, c_g, c_0 = ci.rates()
    if not (c_e < c_g <= c_0):
        raise CostOrderingViolated(f"need c_e < c_g <= c_0, got {float(c_e)}, {float(c_g)}, {float(c_0)}")
    return CostModel(_micro(c_e), _micro(c_g), _micro(c_0), bev_mode)
