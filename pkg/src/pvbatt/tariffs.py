"""Tariff and investment-cost parameters."""
from __future__ import annotations

import math
from dataclasses import dataclass

from ._validation import check_scalar

__all__ = ["TariffSchedule", "CostModel"]

_DEFAULT_TIERS = ((10.0, 101.8), (40.0, 99.0), (math.inf, 77.8))


@dataclass(frozen=True)
class TariffSchedule:
    """Feed-in tiers by nominal PV capacity plus market and surcharge rates (EUR/MWh).

    A plant gets the single rate of the first tier whose bound is at least its
    capacity; tranches are not blended.
    """

    tiers: tuple = _DEFAULT_TIERS
    market_revenue: float = 40.0
    surcharge_self_consumption: float = 27.5

    def __post_init__(self):
        tiers = tuple((float(bound), float(rate)) for bound, rate in self.tiers)
        if not tiers:
            raise ValueError("at least one tariff tier is required")
        bounds = [b for b, _ in tiers]
        if bounds != sorted(bounds) or len(set(bounds)) != len(bounds):
            raise ValueError("tariff tiers must be sorted by strictly increasing bound")
        if any(r < 0 for _, r in tiers):
            raise ValueError("tariff rates must be nonnegative")
        if not math.isinf(bounds[-1]):
            tiers = tiers + ((math.inf, tiers[-1][1]),)
        object.__setattr__(self, "tiers", tiers)
        check_scalar(self.market_revenue, "market_revenue", low=0)
        check_scalar(self.surcharge_self_consumption, "surcharge_self_consumption", low=0)

    def fit_rate(self, pv_kwp: float) -> float:
        for bound, rate in self.tiers:
            if pv_kwp <= bound:
                return rate
        return self.tiers[-1][1]


@dataclass(frozen=True)
class CostModel:
    pv_capex: float = 1150.0  # EUR/kWp
    batt_capex: float = 800.0  # EUR/kWh
    maintenance_rate: float = 0.01  # share of I0 per year
    lifetime_years: int = 20
    decay: float = 1.0  # annual cash-flow factor, 1.0 = constant

    def __post_init__(self):
        check_scalar(self.pv_capex, "pv_capex", low=0)
        check_scalar(self.batt_capex, "batt_capex", low=0)
        check_scalar(self.maintenance_rate, "maintenance_rate", low=0)
        check_scalar(self.decay, "decay", low=0, low_open=True)
        if int(self.lifetime_years) != self.lifetime_years or self.lifetime_years < 1:
            raise ValueError("lifetime_years must be a positive integer")
        object.__setattr__(self, "lifetime_years", int(self.lifetime_years))
