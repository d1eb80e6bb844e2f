"""Self-consumption, self-sufficiency, peak injection and curtailment losses."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dispatch import DispatchResult

__all__ = [
    "MetricSet",
    "MetricError",
    "self_consumption_numerator",
    "compute_scr_ssr",
    "curtailed_energy_kwh",
    "curtailment_losses",
    "peak_feed_in_pct",
]


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class MetricSet:
    scr: float
    ssr: float
    peak_feed_in_pct_of_pv: float
    curtailment_loss_frac: float
    self_consumed_kwh: float
    pv_kwh: float
    demand_kwh: float
    feed_in_kwh: float
    curtailed_kwh: float


def _arrays(d: DispatchResult, load, pv):
    load = d.load if load is None else np.asarray(getattr(load, "values", load), dtype=float)
    pv = d.pv if pv is None else np.asarray(getattr(pv, "values", pv), dtype=float)
    return load, pv


def self_consumption_numerator(d: DispatchResult, pv=None) -> float:
    """PV generation minus feed-in and battery losses, both losses taken positive."""
    _, pv = _arrays(d, None, pv)
    p = d.plant
    return (math.fsum(pv) - math.fsum(d.feed_in)
            - (1.0 - p.eta_ch) * math.fsum(d.charge)
            - (1.0 / p.eta_dch - 1.0) * math.fsum(d.discharge))


def compute_scr_ssr(d: DispatchResult, load=None, pv=None,
                    cap_fraction: float = 0.7) -> MetricSet:
    """Metrics for a dispatch result.

    The shared numerator is the self-consumed energy, computed as demand minus
    supply; :func:`self_consumption_numerator` gives the equivalent loss-term
    expansion.
    """
    load, pv = _arrays(d, load, pv)
    pv_total = math.fsum(pv)
    demand = math.fsum(load)
    if not pv_total > 0:
        raise MetricError("total PV generation is zero; SCR undefined")
    if not demand > 0:
        raise MetricError("total demand is zero; SSR undefined")
    used = demand - math.fsum(d.supply)
    curtailed = curtailed_energy_kwh(d, cap_fraction)
    return MetricSet(
        scr=used / pv_total,
        ssr=used / demand,
        peak_feed_in_pct_of_pv=peak_feed_in_pct(d),
        curtailment_loss_frac=curtailed / pv_total,
        self_consumed_kwh=used,
        pv_kwh=pv_total,
        demand_kwh=demand,
        feed_in_kwh=math.fsum(d.feed_in),
        curtailed_kwh=curtailed,
    )


def curtailed_energy_kwh(d: DispatchResult, cap_fraction: float) -> float:
    if not 0 < cap_fraction <= 1:
        raise MetricError(f"cap_fraction must be in (0, 1], got {cap_fraction}")
    dt = d.step_hours
    cap_kw = cap_fraction * d.plant.pv_kwp
    excess = np.maximum(d.feed_in / dt - cap_kw, 0.0) * dt
    return math.fsum(excess)


def curtailment_losses(d: DispatchResult, cfg=None, cap_fraction: float = 0.7) -> float:
    """Share of annual PV energy above the feed-in power cap.

    ``cfg`` is accepted for symmetry; the PV capacity is taken from the plant
    the dispatch was computed for.
    """
    pv_total = math.fsum(d.pv)
    if not pv_total > 0:
        return 0.0
    return curtailed_energy_kwh(d, cap_fraction) / pv_total


def peak_feed_in_pct(d: DispatchResult, cfg=None) -> float:
    """Peak feed-in power as a fraction of nominal PV capacity."""
    if not d.plant.pv_kwp > 0:
        raise MetricError("PV capacity is zero")
    return d.peak_feed_in_kw / d.plant.pv_kwp
