"""Battery dispatch under the cost objective and the grid-friendly objective.

Energies are kWh per interval, powers kW, prices EUR/MWh. The cost of a
schedule is ``p_supply * sum(supply) - fit * sum(feed_in)`` converted to EUR.

The cost-minimizing schedule is computed by a greedy rule (charge surplus,
discharge into deficits, both as early as possible) followed by two backward
corrections that matter only at the end of the horizon: charge that would be
stranded in the battery is fed in instead, and any initial state of charge
that is never needed is sold. The grid-friendly schedule is the optimum of the
weighted LP; by default the LP also carries a row that keeps the cost at the
cost-optimal value, so the peak is minimized among cost-optimal schedules.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from datetime import datetime

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import lpcore
from ._validation import as_energy_array, check_same_length, check_scalar
from .profiles import STEP_MINUTES, TimeSeries
from .tariffs import TariffSchedule

__all__ = [
    "SystemConfig",
    "Plant",
    "DispatchResult",
    "DispatchError",
    "PreconditionError",
    "dispatch_cost_min",
    "dispatch_grid_friendly",
    "dispatch_netting",
    "build_dispatch_lp",
    "lp_dispatch",
    "write_trace",
    "BatteryDispatcher",
]

COST, WEIGHTED = "cost", "weighted"
# end-of-horizon SOC below this is treated as rounding residue
ROUNDING_KWH = 1e-12
_TRACE_HEADER = "t,supply_kwh,feed_in_kwh,charge_kwh,discharge_kwh,soc_kwh"


class DispatchError(RuntimeError):
    pass


class PreconditionError(ValueError):
    """The greedy rule is not optimal for these prices; use the LP path."""


@dataclass(frozen=True)
class SystemConfig:
    """Relative system sizing plus battery, price and weighting parameters.

    ``pv_size_rel`` is kWp and ``batt_size_rel`` kWh per MWh of annual
    consumption. ``capacity_kwh`` and ``pv_kwp`` override the relative sizes
    when given. ``fit_override`` replaces the tier rate used in dispatch.
    """

    pv_size_rel: float = 1.0
    batt_size_rel: float = 0.0
    eta_ch: float = 0.94
    eta_dch: float = 0.94
    r_ch_max: float = 0.6  # MW per MWh of capacity
    r_dch_max: float = 0.6
    p_supply: float = 240.0
    tariffs: TariffSchedule = field(default_factory=TariffSchedule)
    lam: float = 0.01
    soc_initial: float = 0.0  # kWh
    cyclic_soc: bool = False
    preserve_cost: bool = True
    capacity_kwh: float | None = None
    pv_kwp: float | None = None
    fit_override: float | None = None

    def __post_init__(self):
        check_scalar(self.pv_size_rel, "pv_size_rel", low=0)
        check_scalar(self.batt_size_rel, "batt_size_rel", low=0)
        check_scalar(self.eta_ch, "eta_ch", low=0, high=1, low_open=True)
        check_scalar(self.eta_dch, "eta_dch", low=0, high=1, low_open=True)
        check_scalar(self.r_ch_max, "r_ch_max", low=0, low_open=True)
        check_scalar(self.r_dch_max, "r_dch_max", low=0, low_open=True)
        check_scalar(self.p_supply, "p_supply", low=0)
        check_scalar(self.lam, "lam", low=0, high=1)
        check_scalar(self.soc_initial, "soc_initial", low=0)
        for name in ("capacity_kwh", "pv_kwp", "fit_override"):
            if getattr(self, name) is not None:
                check_scalar(getattr(self, name), name, low=0)

    def with_sizes(self, pv_size_rel=None, batt_size_rel=None) -> "SystemConfig":
        changes = {}
        if pv_size_rel is not None:
            changes["pv_size_rel"] = pv_size_rel
        if batt_size_rel is not None:
            changes["batt_size_rel"] = batt_size_rel
        return replace(self, **changes)

    def resolve(self, annual_mwh: float) -> "Plant":
        """Absolute plant parameters for a property consuming ``annual_mwh``."""
        annual_mwh = check_scalar(annual_mwh, "annual_mwh", low=0)
        capacity = self.capacity_kwh if self.capacity_kwh is not None \
            else self.batt_size_rel * annual_mwh
        pv_kwp = self.pv_kwp if self.pv_kwp is not None else self.pv_size_rel * annual_mwh
        if self.soc_initial > capacity * (1 + 1e-12):
            raise ValueError(f"soc_initial {self.soc_initial} exceeds capacity {capacity}")
        fit = self.fit_override if self.fit_override is not None \
            else self.tariffs.fit_rate(pv_kwp)
        return Plant(capacity_kwh=capacity, pv_kwp=pv_kwp,
                     p_ch_max_kw=self.r_ch_max * capacity,
                     p_dch_max_kw=self.r_dch_max * capacity,
                     eta_ch=self.eta_ch, eta_dch=self.eta_dch,
                     p_supply=self.p_supply, fit=fit, lam=self.lam,
                     soc_initial=min(self.soc_initial, capacity),
                     cyclic_soc=self.cyclic_soc)


@dataclass(frozen=True)
class Plant:
    capacity_kwh: float
    pv_kwp: float
    p_ch_max_kw: float
    p_dch_max_kw: float
    eta_ch: float
    eta_dch: float
    p_supply: float
    fit: float
    lam: float = 0.01
    soc_initial: float = 0.0
    cyclic_soc: bool = False

    def cost(self, supply, feed_in) -> float:
        return (self.p_supply * math.fsum(supply) - self.fit * math.fsum(feed_in)) / 1000.0


@dataclass(frozen=True, eq=False)
class DispatchResult:
    load: np.ndarray
    pv: np.ndarray
    supply: np.ndarray
    feed_in: np.ndarray
    charge: np.ndarray
    discharge: np.ndarray
    soc: np.ndarray
    plant: Plant
    step_hours: float
    objective: str
    start: datetime | None = None
    peak_feed_in_kw: float = field(init=False)
    cost_eur: float = field(init=False)

    def __post_init__(self):
        for name in ("load", "pv", "supply", "feed_in", "charge", "discharge", "soc"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        peak = float(self.feed_in.max()) / self.step_hours if self.feed_in.size else 0.0
        object.__setattr__(self, "peak_feed_in_kw", peak)
        object.__setattr__(self, "cost_eur", self.plant.cost(self.supply, self.feed_in))

    def __len__(self):
        return self.load.size

    @property
    def self_consumed_kwh(self) -> float:
        return math.fsum(self.load) - math.fsum(self.supply)

    @property
    def omega(self) -> float:
        """Cost of buying the whole demand from the grid (EUR)."""
        return self.plant.p_supply * math.fsum(self.load) / 1000.0

    def series(self, name: str) -> TimeSeries:
        start = self.start or datetime(2017, 1, 1)
        return TimeSeries(start, getattr(self, name), int(round(self.step_hours * 60)))

    def balance_residual(self) -> np.ndarray:
        return (self.supply - self.feed_in + self.discharge - self.charge) - (self.load - self.pv)

    def soc_residual(self) -> np.ndarray:
        p = self.plant
        prev = np.empty_like(self.soc)
        prev[1:] = self.soc[:-1]
        prev[0] = self.soc[-1] if p.cyclic_soc else p.soc_initial
        return self.soc - prev - p.eta_ch * self.charge + self.discharge / p.eta_dch


# ---------------------------------------------------------------------------
# input handling


def _inputs(load, pv):
    step_minutes, start = STEP_MINUTES, None
    for s in (load, pv):
        if isinstance(s, TimeSeries):
            step_minutes, start = s.step_minutes, s.start
    if isinstance(load, TimeSeries) and isinstance(pv, TimeSeries) \
            and load.step_minutes != pv.step_minutes:
        raise ValueError("load and pv have different interval lengths")
    lv = as_energy_array(load.values if isinstance(load, TimeSeries) else load, "load")
    pvv = as_energy_array(pv.values if isinstance(pv, TimeSeries) else pv, "pv")
    check_same_length(load=lv, pv=pvv)
    return lv, pvv, step_minutes / 60.0, start


def _plant(cfg, load, annual_mwh):
    if isinstance(cfg, Plant):
        return cfg
    if annual_mwh is None:
        annual_mwh = math.fsum(load) / 1000.0
    return cfg.resolve(annual_mwh)


# ---------------------------------------------------------------------------
# greedy cost minimization


def _check_greedy(plant: Plant):
    if plant.capacity_kwh > 0 and plant.p_supply <= plant.fit:
        raise PreconditionError(
            f"p_supply ({plant.p_supply}) must exceed the feed-in rate ({plant.fit}) for the "
            "greedy dispatcher; use dispatch_cost_min(..., method='lp')")
    if plant.capacity_kwh > 0 and plant.p_supply * plant.eta_ch * plant.eta_dch < plant.fit:
        raise PreconditionError(
            "storing is worth less than feeding in at these prices and efficiencies; "
            "use dispatch_cost_min(..., method='lp')")


def _forward(load, pv, plant, dt, soc0):
    C = plant.capacity_kwh
    ech, edch = plant.eta_ch, plant.eta_dch
    chmax, dchmax = plant.p_ch_max_kw * dt, plant.p_dch_max_kw * dt
    T = len(load)
    ch = [0.0] * T
    dch = [0.0] * T
    soc = [0.0] * T
    s = soc0
    for t in range(T):
        net = pv[t] - load[t]
        if net > 0.0:
            room = (C - s) / ech
            x = min(net, chmax, room)
            if x >= room:
                x, s = room, C
            else:
                s = s + ech * x
            ch[t] = x
        elif net < 0.0:
            avail = s * edch
            x = min(-net, dchmax, avail)
            if x >= avail:
                x, s = avail, 0.0
            else:
                s = s - x / edch
            dch[t] = x
        soc[t] = s
    return ch, dch, soc


def _uncharge_stranded(ch, soc, eta_ch):
    """Remove the latest charges whose energy is never discharged."""
    T = len(ch)
    slack = math.inf
    removed_next = 0.0
    for t in range(T - 1, -1, -1):
        slack = min(soc[t], slack - eta_ch * removed_next)
        d = 0.0
        if ch[t] > 0.0 and slack > 0.0:
            d = min(ch[t], slack / eta_ch)
            ch[t] -= d
        removed_next = d


def _dump_initial(ch, dch, soc, dchmax, eta_dch, allowed):
    """Sell energy left in the battery by extra discharge, latest first."""
    T = len(dch)
    slack = math.inf
    extra_next = 0.0
    for t in range(T - 1, -1, -1):
        slack = min(soc[t], slack - extra_next / eta_dch)
        e = 0.0
        if allowed[t] and ch[t] == 0.0 and slack > 0.0:
            e = min(dchmax - dch[t], slack * eta_dch)
            if e > 0.0:
                dch[t] += e
            else:
                e = 0.0
        extra_next = e


def _soc_path(ch, dch, plant, soc0):
    C = plant.capacity_kwh
    ech, edch = plant.eta_ch, plant.eta_dch
    soc = [0.0] * len(ch)
    s = soc0
    for t in range(len(ch)):
        s = s + ech * ch[t] - dch[t] / edch
        if s < 0.0:
            # rounding only: trim the discharge to what is stored
            dch[t] = max(0.0, (s + dch[t] / edch) * edch)
            s = 0.0
        elif s > C:
            ch[t] = max(0.0, (C - s + ech * ch[t]) / ech)
            s = C
        soc[t] = s
    return soc


def _greedy(load, pv, plant, dt, restrict_dump=False):
    C = plant.capacity_kwh
    T = len(load)
    lo, pl = load.tolist(), pv.tolist()
    if C <= 0.0:
        ch, dch, soc = [0.0] * T, [0.0] * T, [0.0] * T
    elif plant.cyclic_soc:
        soc0 = 0.0
        for _ in range(200):
            ch, dch, soc = _forward(lo, pl, plant, dt, soc0)
            if abs(soc[-1] - soc0) <= 1e-12 * max(1.0, C):
                break
            soc0 = soc[-1]
        else:
            raise DispatchError("cyclic state of charge did not converge; use the LP path")
        ch, dch, soc = _forward(lo, pl, plant, dt, soc[-1])
        soc0 = soc[-1]
        soc = _soc_path(ch, dch, plant, soc0)
    else:
        soc0 = plant.soc_initial
        ch, dch, soc = _forward(lo, pl, plant, dt, soc0)
        _uncharge_stranded(ch, soc, plant.eta_ch)
        soc = _soc_path(ch, dch, plant, soc0)
        if plant.fit > 0.0 and soc[-1] > ROUNDING_KWH:
            deficit = [l >= p for l, p in zip(lo, pl)]
            _dump_initial(ch, dch, soc, plant.p_dch_max_kw * dt, plant.eta_dch, deficit)
            soc = _soc_path(ch, dch, plant, soc0)
            if not restrict_dump and soc[-1] > ROUNDING_KWH:
                _dump_initial(ch, dch, soc, plant.p_dch_max_kw * dt, plant.eta_dch,
                              [True] * T)
                soc = _soc_path(ch, dch, plant, soc0)
    return _assemble(load, pv, np.array(ch), np.array(dch), np.array(soc), plant, dt)


def _assemble(load, pv, ch, dch, soc, plant, dt, objective=COST, start=None):
    net = load - pv + ch - dch
    supply = np.maximum(net, 0.0)
    feed = np.maximum(-net, 0.0)
    return DispatchResult(load=load, pv=pv, supply=supply, feed_in=feed, charge=ch,
                          discharge=dch, soc=soc, plant=plant, step_hours=dt,
                          objective=objective, start=start)


def dispatch_netting(load, pv, cfg, annual_mwh=None) -> DispatchResult:
    """Instantaneous netting without storage."""
    lv, pvv, dt, start = _inputs(load, pv)
    plant = replace(_plant(cfg, lv, annual_mwh), capacity_kwh=0.0, p_ch_max_kw=0.0,
                    p_dch_max_kw=0.0, soc_initial=0.0)
    z = np.zeros_like(lv)
    return replace(_assemble(lv, pvv, z, z.copy(), z.copy(), plant, dt), start=start)


def dispatch_cost_min(load, pv, cfg, annual_mwh=None, method: str = "greedy",
                      lp_method: str = "auto") -> DispatchResult:
    """Cost-minimizing schedule.

    ``method="greedy"`` requires ``p_supply`` above the feed-in rate (and
    storing to be worth more than feeding in); ``method="lp"`` solves the
    cost LP directly and works for any prices.
    """
    lv, pvv, dt, start = _inputs(load, pv)
    plant = _plant(cfg, lv, annual_mwh)
    if method == "lp":
        return lp_dispatch(lv, pvv, plant, dt, objective=COST, method=lp_method, start=start)
    if method != "greedy":
        raise ValueError(f"unknown dispatch method {method!r}")
    _check_greedy(plant)
    return replace(_greedy(lv, pvv, plant, dt), start=start)


def dispatch_grid_friendly(load, pv, cfg, annual_mwh=None, lp_method: str = "auto",
                           preserve_cost: bool | None = None) -> DispatchResult:
    """Optimum of the weighted cost and peak feed-in objective.

    With ``preserve_cost`` (default from the config) the LP also requires the
    cost to stay at the cost-optimal value over schedules that charge only
    from surplus and discharge only into deficits.
    """
    lv, pvv, dt, start = _inputs(load, pv)
    cfg_preserve = getattr(cfg, "preserve_cost", True)
    preserve = cfg_preserve if preserve_cost is None else preserve_cost
    plant = _plant(cfg, lv, annual_mwh)
    if not plant.pv_kwp > 0:
        raise ValueError("grid-friendly dispatch needs a positive PV capacity")
    if not plant.lam > 0:
        raise ValueError("lam must be positive for the grid-friendly objective")
    if plant.capacity_kwh <= 0.0:
        res = dispatch_netting(lv, pvv, plant, annual_mwh)
        return replace(res, objective=WEIGHTED, start=start)
    cost_cap = None
    if preserve:
        try:
            _check_greedy(plant)
            ref = _greedy(lv, pvv, plant, dt, restrict_dump=True).cost_eur
        except (PreconditionError, DispatchError):
            ref = lp_dispatch(lv, pvv, plant, dt, objective=COST, fixings=True,
                              method=lp_method).cost_eur
        omega = plant.p_supply * math.fsum(lv) / 1000.0
        cost_cap = ref + 1e-9 * max(omega, 1e-12)
    return lp_dispatch(lv, pvv, plant, dt, objective=WEIGHTED, cost_cap=cost_cap,
                       method=lp_method, start=start)


# ---------------------------------------------------------------------------
# LP formulation


def build_dispatch_lp(load, pv, cfg, objective: str = COST, annual_mwh=None, *,
                      step_hours: float | None = None, fixings: bool | None = None,
                      cost_cap: float | None = None) -> lpcore.LinearProgram:
    """Assemble the dispatch LP.

    Variables are laid out in blocks of length T: supply, feed-in, charge,
    discharge, SOC, followed by the peak feed-in power in weighted mode. Rows
    are T balance equalities, T SOC equalities, T peak rows (weighted) and an
    optional cost cap row.
    """
    if objective not in (COST, WEIGHTED):
        raise ValueError(f"objective must be 'cost' or 'weighted', got {objective!r}")
    lv, pvv, dt, _ = _inputs(load, pv)
    if step_hours is not None:
        dt = step_hours
    plant = _plant(cfg, lv, annual_mwh)
    T = lv.size
    weighted = objective == WEIGHTED
    if fixings is None:
        fixings = weighted
    n = 5 * T + (1 if weighted else 0)
    iS, iF, iC, iD, iQ, iP = 0, T, 2 * T, 3 * T, 4 * T, 5 * T
    t = np.arange(T)

    c = np.zeros(n)
    price_s, price_f = plant.p_supply / 1000.0, plant.fit / 1000.0
    if weighted:
        omega = plant.p_supply * math.fsum(lv) / 1000.0
        if not omega > 0:
            raise ValueError("weighted objective needs positive total demand")
        if not plant.pv_kwp > 0:
            raise ValueError("weighted objective needs positive PV capacity")
        c[iS:iS + T] = plant.lam * price_s / omega
        c[iF:iF + T] = -plant.lam * price_f / omega
        c[iP] = (1.0 - plant.lam) / plant.pv_kwp
    else:
        c[iS:iS + T] = price_s
        c[iF:iF + T] = -price_f

    rows, cols, vals = [], [], []

    def add(r, k, v):
        rows.append(r)
        cols.append(k)
        vals.append(np.broadcast_to(np.asarray(v, dtype=float), r.shape))

    # balance: supply - feed + dch - ch = load - pv
    add(t, iS + t, 1.0)
    add(t, iF + t, -1.0)
    add(t, iD + t, 1.0)
    add(t, iC + t, -1.0)
    b = [lv - pvv]
    senses = [np.full(T, lpcore.EQ)]

    # soc_t - soc_{t-1} - eta_ch ch_t + dch_t / eta_dch = 0
    r = T + t
    add(r, iQ + t, 1.0)
    add(r, iC + t, -plant.eta_ch)
    add(r, iD + t, 1.0 / plant.eta_dch)
    rhs = np.zeros(T)
    if T > 1:
        add(r[1:], iQ + t[:-1], -1.0)
    if plant.cyclic_soc:
        add(r[:1], np.array([iQ + T - 1]), -1.0)
    else:
        rhs[0] = plant.soc_initial
    b.append(rhs)
    senses.append(np.full(T, lpcore.EQ))
    m = 2 * T

    if weighted:
        # feed_t - dt * P <= 0
        r = m + t
        add(r, iF + t, 1.0)
        add(r, np.full(T, iP), -dt)
        b.append(np.zeros(T))
        senses.append(np.full(T, lpcore.LE))
        m += T
    if cost_cap is not None:
        r = np.full(T, m)
        add(r, iS + t, price_s)
        add(r, iF + t, -price_f)
        b.append(np.array([cost_cap]))
        senses.append(np.array([lpcore.LE]))
        m += 1

    lower = np.zeros(n)
    upper = np.full(n, np.inf)
    upper[iC:iC + T] = plant.p_ch_max_kw * dt
    upper[iD:iD + T] = plant.p_dch_max_kw * dt
    upper[iQ:iQ + T] = plant.capacity_kwh
    # imports serve the deficit or the battery, exports come from surplus PV or
    # the battery; this keeps the LP bounded when the tariff exceeds the price
    upper[iS:iS + T] = np.maximum(lv - pvv, 0.0) + upper[iC:iC + T]
    upper[iF:iF + T] = np.maximum(pvv - lv, 0.0) + upper[iD:iD + T]
    if fixings:
        upper[iC:iC + T][lv > pvv] = 0.0
        upper[iD:iD + T][pvv > lv] = 0.0

    return lpcore.LinearProgram(
        c=c, rows=np.concatenate(rows), cols=np.concatenate(cols),
        vals=np.concatenate(vals), senses=np.concatenate(senses), b=np.concatenate(b),
        lower=lower, upper=upper)


def lp_dispatch(load, pv, plant: Plant, dt: float, objective: str = COST, *,
                fixings: bool | None = None, cost_cap: float | None = None,
                method: str = "auto", tolerances: lpcore.Tolerances | None = None,
                start=None) -> DispatchResult:
    """Solve the dispatch LP and return a cleaned schedule.

    The LP charge and discharge are clipped to their bounds, the SOC is
    recomputed by recursion and supply and feed-in follow from the balance,
    so the result satisfies the balance and SOC equations to rounding.
    """
    lv, pvv = np.asarray(load, dtype=float), np.asarray(pv, dtype=float)
    lp = build_dispatch_lp(lv, pvv, plant, objective, step_hours=dt, fixings=fixings,
                           cost_cap=cost_cap)
    sol = lpcore.solve(lp, tolerances, method=method)
    if sol.status is lpcore.LpStatus.INFEASIBLE:
        raise DispatchError("dispatch LP reported infeasible; this indicates an internal error")
    if not sol.optimal:
        raise DispatchError(f"dispatch LP not solved: {sol.status.value}")
    T = lv.size
    x = sol.x
    ch = np.clip(x[2 * T:3 * T], 0.0, lp.upper[2 * T:3 * T])
    dch = np.clip(x[3 * T:4 * T], 0.0, lp.upper[3 * T:4 * T])
    # below solver noise the flows are zero
    ch[ch < 1e-12] = 0.0
    dch[dch < 1e-12] = 0.0
    chl, dchl = ch.tolist(), dch.tolist()
    soc0 = float(np.clip(x[5 * T - 1], 0.0, plant.capacity_kwh)) if plant.cyclic_soc \
        else plant.soc_initial
    soc = _soc_path(chl, dchl, plant, soc0)
    return _assemble(lv, pvv, np.array(chl), np.array(dchl), np.array(soc), plant, dt,
                     objective=objective, start=start)


# ---------------------------------------------------------------------------
# I/O


def write_trace(result: DispatchResult, path) -> None:
    """Write the per-interval trace CSV."""
    cols = (result.supply, result.feed_in, result.charge, result.discharge, result.soc)
    lines = [_TRACE_HEADER]
    for t, row in enumerate(zip(*(c.tolist() for c in cols))):
        lines.append(f"{t}," + ",".join(repr(v) for v in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# sklearn-style wrapper


class BatteryDispatcher(TransformerMixin, BaseEstimator):
    """Dispatch as a transformer.

    ``X`` has two columns, load and PV energy per interval in kWh.
    ``transform`` returns columns supply, feed-in, charge, discharge and SOC.
    ``fit`` records the annual consumption used to size the system unless
    ``annual_mwh`` is given.
    """

    def __init__(self, pv_size_rel=1.0, batt_size_rel=0.0, objective="cost",
                 annual_mwh=None, step_minutes=STEP_MINUTES, eta_ch=0.94, eta_dch=0.94,
                 r_max=0.6, p_supply=240.0, lam=0.01):
        self.pv_size_rel = pv_size_rel
        self.batt_size_rel = batt_size_rel
        self.objective = objective
        self.annual_mwh = annual_mwh
        self.step_minutes = step_minutes
        self.eta_ch = eta_ch
        self.eta_dch = eta_dch
        self.r_max = r_max
        self.p_supply = p_supply
        self.lam = lam

    def _config(self):
        return SystemConfig(pv_size_rel=self.pv_size_rel, batt_size_rel=self.batt_size_rel,
                            eta_ch=self.eta_ch, eta_dch=self.eta_dch, r_ch_max=self.r_max,
                            r_dch_max=self.r_max, p_supply=self.p_supply, lam=self.lam)

    @staticmethod
    def _split(X):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != 2:
            raise ValueError(f"X must have shape (T, 2), got {X.shape}")
        return X[:, 0], X[:, 1]

    def fit(self, X, y=None):
        load, _ = self._split(X)
        annual = self.annual_mwh if self.annual_mwh is not None else math.fsum(load) / 1000.0
        self.plant_ = self._config().resolve(annual)
        self.n_features_in_ = 2
        return self

    def transform(self, X):
        check_is_fitted(self, "plant_")
        load, pv = self._split(X)
        dt = self.step_minutes / 60.0
        if self.objective == "cost":
            _check_greedy(self.plant_)
            res = _greedy(as_energy_array(load, "load"), as_energy_array(pv, "pv"),
                          self.plant_, dt)
        elif self.objective in ("grid", "grid_friendly", WEIGHTED):
            res = dispatch_grid_friendly(load, pv, self.plant_)
        else:
            raise ValueError(f"unknown objective {self.objective!r}")
        self.result_ = res
        return np.column_stack([res.supply, res.feed_in, res.charge, res.discharge, res.soc])

    def get_feature_names_out(self, input_features=None):
        return np.array(["supply", "feed_in", "charge", "discharge", "soc"], dtype=object)
