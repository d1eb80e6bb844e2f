"""Annual cash flows, internal rates of return and break-even battery prices.

Cash flows are real and constant over the lifetime unless a decay factor is
set, in which case the net flow of year ``t`` is ``CF * decay**(t-1)``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .dispatch import DispatchResult
from .metrics import MetricSet
from .tariffs import CostModel, TariffSchedule

__all__ = [
    "Scenario",
    "TariffSchedule",
    "CostModel",
    "ScenarioEconomics",
    "investment",
    "remuneration_rate",
    "annual_cashflow",
    "npv",
    "irr",
    "irr_battery_constituent",
    "breakeven_batt_price",
    "evaluate_scenario",
]


class Scenario(str, enum.Enum):
    FIT = "fit"
    MARKET = "market"
    NONE = "none"


@dataclass(frozen=True)
class ScenarioEconomics:
    scenario: Scenario
    annual_cashflow: float
    annual_cashflow_no_batt: float
    i0_total: float
    i0_pv: float
    i0_batt: float
    irr_system: float | None
    irr_battery: float | None
    breakeven_batt_price: float | None
    delta_savings: float

    def __post_init__(self):
        if not math.isclose(self.i0_total, self.i0_pv + self.i0_batt, rel_tol=1e-12,
                            abs_tol=1e-9):
            raise ValueError("i0_total must equal i0_pv + i0_batt")


def investment(pv_kwp: float, capacity_kwh: float, costs: CostModel) -> tuple[float, float]:
    """Initial investment ``(I0_pv, I0_batt)`` in EUR."""
    return costs.pv_capex * pv_kwp, costs.batt_capex * capacity_kwh


def remuneration_rate(scenario, pv_kwp: float, tariffs: TariffSchedule,
                      fit_rate: float | None = None) -> float:
    scenario = Scenario(scenario)
    if scenario is Scenario.FIT:
        return tariffs.fit_rate(pv_kwp) if fit_rate is None else fit_rate
    if scenario is Scenario.MARKET:
        return tariffs.market_revenue
    return 0.0


def annual_cashflow(m: MetricSet, d: DispatchResult, cfg=None,
                    tariffs: TariffSchedule | None = None, costs: CostModel | None = None,
                    scenario="fit", *, i0: float | None = None,
                    surcharge_fit_only: bool = False) -> float:
    """Net annual cash flow in EUR.

    Savings on procurement minus the self-consumption surcharge, plus
    remuneration of the uncurtailed feed-in, minus maintenance on ``i0``
    (default: PV plus battery investment of the dispatched plant). With
    ``surcharge_fit_only`` the surcharge is charged only in the fit scenario.
    """
    tariffs = tariffs or getattr(cfg, "tariffs", None) or TariffSchedule()
    costs = costs or CostModel()
    scenario = Scenario(scenario)
    plant = d.plant
    if i0 is None:
        i0 = sum(investment(plant.pv_kwp, plant.capacity_kwh, costs))
    used_mwh = m.self_consumed_kwh / 1000.0
    sold_mwh = (m.feed_in_kwh - m.curtailed_kwh) / 1000.0
    surcharge = tariffs.surcharge_self_consumption
    if surcharge_fit_only and scenario is not Scenario.FIT:
        surcharge = 0.0
    rate = remuneration_rate(scenario, plant.pv_kwp, tariffs, fit_rate=plant.fit)
    return (plant.p_supply * used_mwh - surcharge * used_mwh + rate * sold_mwh
            - costs.maintenance_rate * i0)


def _flows(cashflow, years: int, decay: float) -> np.ndarray:
    if np.ndim(cashflow) == 0:
        return float(cashflow) * decay ** np.arange(years, dtype=float)
    flows = np.asarray(cashflow, dtype=float)
    if flows.shape != (years,):
        raise ValueError(f"expected {years} cash flows, got shape {flows.shape}")
    return flows


def npv(rate: float, i0: float, cashflow, years: int, decay: float = 1.0) -> float:
    flows = _flows(cashflow, years, decay)
    disc = (1.0 + rate) ** -np.arange(1, years + 1, dtype=float)
    return math.fsum(flows * disc) - i0


def irr(i0: float, cashflow, years: int = 20, decay: float = 1.0) -> float | None:
    """Internal rate of return of ``-i0`` now followed by yearly ``cashflow``.

    ``cashflow`` is a constant (optionally decaying) or a sequence of length
    ``years``. Returns ``None`` when there is no root above -1, which for a
    positive investment means the flows never turn positive.
    """
    if int(years) != years or years < 1:
        raise ValueError("years must be a positive integer")
    years = int(years)
    flows = _flows(cashflow, years, decay)
    if not i0 > 0 or not np.any(flows > 0):
        return None

    def f(r):
        return npv(r, i0, flows, years)

    # f decreases in r when all flows are nonnegative; bracket the sign change
    lo, hi = -0.5, 1.0
    while f(lo) < 0:
        lo = -1.0 + (lo + 1.0) / 8.0
        if lo + 1.0 < 1e-12:
            return None
    while f(hi) > 0:
        hi = 2.0 * hi + 1.0
        if hi > 1e9:
            return None
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return lo if abs(f(lo)) <= abs(f(hi)) else hi


def irr_battery_constituent(cf_with: float, cf_without: float, i0_batt: float,
                            years: int = 20, decay: float = 1.0) -> float | None:
    """IRR of the incremental cash flow against the battery investment alone."""
    if not i0_batt > 0:
        return None
    return irr(i0_batt, cf_with - cf_without, years, decay)


def breakeven_batt_price(delta_savings: float, capacity_kwh: float, lifetime: int = 20,
                         maintenance_rate: float = 0.01, decay: float = 1.0) -> float:
    """Specific battery price (EUR/kWh) at which the battery IRR is zero.

    ``delta_savings`` is the gross yearly gain from the battery before its own
    maintenance. At zero IRR, ``G * (dS - m * I) = I`` with ``G`` the sum of
    the yearly decay factors, so ``I = G * dS / (1 + G * m)``.
    """
    if not capacity_kwh > 0:
        raise ValueError("capacity_kwh must be positive")
    if delta_savings <= 0:
        return 0.0
    g = math.fsum(decay ** np.arange(int(lifetime), dtype=float))
    return g * delta_savings / (1.0 + g * maintenance_rate) / capacity_kwh


def evaluate_scenario(with_batt: tuple[MetricSet, DispatchResult],
                      without_batt: tuple[MetricSet, DispatchResult], scenario,
                      tariffs: TariffSchedule | None = None,
                      costs: CostModel | None = None,
                      surcharge_fit_only: bool = False) -> ScenarioEconomics:
    """System and battery economics for one remuneration scenario.

    ``without_batt`` is the same property and PV plant dispatched with no
    battery; each cash flow carries maintenance on its own investment.
    """
    costs = costs or CostModel()
    tariffs = tariffs or TariffSchedule()
    m1, d1 = with_batt
    m0, d0 = without_batt
    i0_pv, i0_batt = investment(d1.plant.pv_kwp, d1.plant.capacity_kwh, costs)
    kw = dict(tariffs=tariffs, costs=costs, scenario=scenario,
              surcharge_fit_only=surcharge_fit_only)
    cf1 = annual_cashflow(m1, d1, i0=i0_pv + i0_batt, **kw)
    cf0 = annual_cashflow(m0, d0, i0=i0_pv, **kw)
    years, g = costs.lifetime_years, costs.decay
    delta = cf1 - cf0 + costs.maintenance_rate * i0_batt
    capacity = d1.plant.capacity_kwh
    return ScenarioEconomics(
        scenario=Scenario(scenario),
        annual_cashflow=cf1,
        annual_cashflow_no_batt=cf0,
        i0_total=i0_pv + i0_batt,
        i0_pv=i0_pv,
        i0_batt=i0_batt,
        irr_system=irr(i0_pv + i0_batt, cf1, years, g),
        irr_battery=irr_battery_constituent(cf1, cf0, i0_batt, years, g),
        breakeven_batt_price=(breakeven_batt_price(delta, capacity, years,
                                                   costs.maintenance_rate, g)
                              if capacity > 0 else None),
        delta_savings=delta,
    )
