"""Full-factorial study over properties, system sizes, objectives and scenarios.

Work is split into one task per (property, PV size, objective). A task
dispatches every battery size plus the battery-free reference, so the battery
economics can be computed inside the task. Results are sorted by cell key, so
output does not depend on worker scheduling.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .dispatch import SystemConfig, dispatch_cost_min, dispatch_grid_friendly, dispatch_netting
from .economics import CostModel, Scenario, ScenarioEconomics, evaluate_scenario
from .metrics import MetricSet, compute_scr_ssr, curtailment_losses
from .profiles import BuildingProfile, TimeSeries
from .stats import DesignMatrix, build_design

__all__ = [
    "COST",
    "GRID",
    "SweepError",
    "SweepSpec",
    "SweepCell",
    "Table",
    "run_sweep",
    "aggregate_tables",
    "feature_table",
    "write_cells",
    "read_cells",
    "write_table",
    "write_tables",
    "table_filename",
]

COST, GRID = "cost", "grid_friendly"
_OBJECTIVE_ALIASES = {"cost": COST, "grid": GRID, "grid_friendly": GRID, "weighted": GRID}


class SweepError(RuntimeError):
    pass


def _grid(lo_steps, hi_steps):
    return tuple(round(0.2 * i, 1) for i in range(lo_steps, hi_steps + 1))


def canonical_objective(name: str) -> str:
    try:
        return _OBJECTIVE_ALIASES[name]
    except KeyError:
        raise ValueError(f"unknown objective {name!r}") from None


@dataclass(frozen=True)
class SweepSpec:
    pv_sizes: tuple = _grid(1, 10)
    batt_sizes: tuple = _grid(0, 10)
    objectives: tuple = (COST, GRID)
    scenarios: tuple = ("fit", "market", "none")
    cap_fractions: tuple = (0.7,)

    def __post_init__(self):
        pv = tuple(float(v) for v in self.pv_sizes)
        batt = tuple(float(v) for v in self.batt_sizes)
        objectives = tuple(dict.fromkeys(canonical_objective(o) for o in self.objectives))
        scenarios = tuple(dict.fromkeys(Scenario(s).value for s in self.scenarios))
        caps = tuple(float(c) for c in self.cap_fractions)
        for name, seq in (("pv_sizes", pv), ("batt_sizes", batt), ("objectives", objectives),
                          ("scenarios", scenarios), ("cap_fractions", caps)):
            if not seq:
                raise ValueError(f"{name} must not be empty")
        if any(v <= 0 for v in pv):
            raise ValueError("PV sizes must be positive")
        if any(v < 0 for v in batt):
            raise ValueError("battery sizes must be nonnegative")
        if any(not 0 < c <= 1 for c in caps):
            raise ValueError("cap fractions must lie in (0, 1]")
        object.__setattr__(self, "pv_sizes", tuple(sorted(set(pv))))
        object.__setattr__(self, "batt_sizes", tuple(sorted(set(batt))))
        object.__setattr__(self, "objectives", objectives)
        object.__setattr__(self, "scenarios", scenarios)
        object.__setattr__(self, "cap_fractions", caps)


@dataclass(frozen=True, eq=False)
class SweepCell:
    property_id: str
    building_type: str
    annual_mwh: float
    summer_share: float
    daytime_share: float
    pv_size_rel: float
    batt_size_rel: float
    objective: str
    scenario: str
    pv_kwp: float
    capacity_kwh: float
    cost_eur: float
    metrics: MetricSet
    economics: ScenarioEconomics
    curtailment: tuple = field(default=())  # (cap_fraction, loss) pairs

    @property
    def key(self):
        return (self.property_id, self.pv_size_rel, self.batt_size_rel, self.objective,
                self.scenario)

    def value(self, name: str):
        """Look up a response by short name (scr, ssr, irr, irr_battery, be, peak)."""
        m, e = self.metrics, self.economics
        lookup = {
            "scr": m.scr,
            "ssr": m.ssr,
            "peak": m.peak_feed_in_pct_of_pv,
            "curtailment": m.curtailment_loss_frac,
            "irr": e.irr_system,
            "irr_system": e.irr_system,
            "irr_battery": e.irr_battery,
            "be": e.breakeven_batt_price,
            "cashflow": e.annual_cashflow,
        }
        try:
            return lookup[name]
        except KeyError:
            raise ValueError(f"unknown response {name!r}") from None


# ---------------------------------------------------------------------------
# execution


@dataclass(frozen=True)
class _Task:
    profile: BuildingProfile
    pv_norm: np.ndarray
    pv_size: float
    objective: str
    spec: SweepSpec
    cfg: SystemConfig
    costs: CostModel
    surcharge_fit_only: bool
    lp_method: str


def _dispatch(objective, load, pv, cfg, annual, lp_method):
    if cfg.batt_size_rel == 0 and cfg.capacity_kwh in (None, 0):
        return dispatch_netting(load, pv, cfg, annual)
    if objective == COST:
        return dispatch_cost_min(load, pv, cfg, annual)
    return dispatch_grid_friendly(load, pv, cfg, annual, lp_method=lp_method)


def _run_task(task: _Task) -> list[SweepCell]:
    prof = task.profile
    annual = prof.annual_consumption_mwh
    load = prof.load.values
    pv = task.pv_size * annual * task.pv_norm
    cfg = task.cfg.with_sizes(pv_size_rel=task.pv_size, batt_size_rel=0.0)
    cap0 = task.spec.cap_fractions[0]
    base = dispatch_netting(load, pv, cfg, annual)
    base_m = compute_scr_ssr(base, cap_fraction=cap0)
    out = []
    for batt in task.spec.batt_sizes:
        cfg_b = cfg.with_sizes(batt_size_rel=batt)
        if batt == 0:
            d, m = base, base_m
        else:
            try:
                d = _dispatch(task.objective, load, pv, cfg_b, annual, task.lp_method)
                m = compute_scr_ssr(d, cap_fraction=cap0)
            except Exception as exc:
                raise SweepError(f"cell failed (property={prof.id}, pv={task.pv_size}, "
                                 f"batt={batt}, objective={task.objective}): "
                                 f"{type(exc).__name__}: {exc}") from exc
        curt = tuple((c, curtailment_losses(d, cap_fraction=c)) for c in task.spec.cap_fractions)
        for scen in task.spec.scenarios:
            econ = evaluate_scenario((m, d), (base_m, base), scen, tariffs=cfg.tariffs,
                                     costs=task.costs,
                                     surcharge_fit_only=task.surcharge_fit_only)
            out.append(SweepCell(
                property_id=prof.id, building_type=prof.building_type.value,
                annual_mwh=annual, summer_share=prof.summer_share,
                daytime_share=prof.daytime_share, pv_size_rel=task.pv_size,
                batt_size_rel=batt, objective=task.objective, scenario=scen,
                pv_kwp=d.plant.pv_kwp, capacity_kwh=d.plant.capacity_kwh,
                cost_eur=d.cost_eur, metrics=m, economics=econ, curtailment=curt))
    return out


def _guarded(task: _Task) -> list[SweepCell]:
    try:
        return _run_task(task)
    except SweepError:
        raise
    except Exception as exc:  # re-raised with the failing coordinates
        raise SweepError(f"cell failed (property={task.profile.id}, pv={task.pv_size}, "
                         f"objective={task.objective}): {type(exc).__name__}: {exc}") from exc


def run_sweep(profiles: Sequence[BuildingProfile], pv_profile: TimeSeries,
              spec: SweepSpec | None = None, cfg: SystemConfig | None = None,
              costs: CostModel | None = None, *, jobs: int = 1,
              surcharge_fit_only: bool = False, lp_method: str = "auto") -> list[SweepCell]:
    """Evaluate every (property, PV, battery, objective, scenario) cell.

    ``pv_profile`` holds generation per kWp; each property gets it scaled by
    ``pv_size_rel * annual_mwh``. Cells come back sorted by key.
    """
    spec = spec or SweepSpec()
    cfg = cfg or SystemConfig()
    costs = costs or CostModel()
    if not profiles:
        raise SweepError("no profiles given")
    ids = [p.id for p in profiles]
    if len(set(ids)) != len(ids):
        raise SweepError("profile ids must be unique")
    for p in profiles:
        if len(p.load) != len(pv_profile) or p.load.step_minutes != pv_profile.step_minutes:
            raise SweepError(f"profile {p.id!r} does not match the PV profile calendar "
                             f"({len(p.load)} vs {len(pv_profile)} intervals)")
    pv_norm = np.asarray(pv_profile.values)
    tasks = [_Task(p, pv_norm, pv, obj, spec, cfg, costs, surcharge_fit_only, lp_method)
             for p in sorted(profiles, key=lambda q: q.id)
             for pv in spec.pv_sizes for obj in spec.objectives]
    if jobs == 1 or len(tasks) == 1:
        results = [_guarded(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_guarded, tasks))
    cells = [c for chunk in results for c in chunk]
    cells.sort(key=lambda c: c.key)
    return cells


# ---------------------------------------------------------------------------
# aggregation


@dataclass(frozen=True, eq=False)
class Table:
    """Mean of a response per size cell: rows are battery sizes, columns PV sizes."""

    metric: str
    scenario: str
    objective: str
    batt_sizes: tuple
    pv_sizes: tuple
    values: np.ndarray  # NaN where no property has a defined value

    def at(self, batt: float, pv: float) -> float:
        return float(self.values[self.batt_sizes.index(batt), self.pv_sizes.index(pv)])


# metric name -> (cell response, scale factor)
TABLE_METRICS = {
    "scr": ("scr", 100.0),
    "ssr": ("ssr", 100.0),
    "irr_system": ("irr_system", 100.0),
    "irr_battery": ("irr_battery", 100.0),
    "be": ("be", 1.0),
    "max_grid_input": ("peak", 100.0),
    "curtailment": ("curtailment", 100.0),
}


def aggregate_tables(cells: Iterable[SweepCell], metrics: Sequence[str] | None = None) -> dict:
    """Mean tables keyed by ``(metric, scenario, objective)``.

    Percent metrics are scaled to percent. Undefined IRR or break-even values
    are left out of the mean; a size cell with none defined is NaN. Battery-only
    metrics have NaN in the zero-battery row.
    """
    cells = list(cells)
    if not cells:
        raise SweepError("no cells to aggregate")
    metrics = list(metrics or TABLE_METRICS)
    props = sorted({c.property_id for c in cells})
    pv_sizes = tuple(sorted({c.pv_size_rel for c in cells}))
    batt_sizes = tuple(sorted({c.batt_size_rel for c in cells}))
    groups = sorted({(c.scenario, c.objective) for c in cells})
    index = {c.key: c for c in cells}
    tables = {}
    for scen, obj in groups:
        for metric in metrics:
            response, scale = TABLE_METRICS[metric]
            vals = np.full((len(batt_sizes), len(pv_sizes)), np.nan)
            for i, b in enumerate(batt_sizes):
                for j, pv in enumerate(pv_sizes):
                    got = []
                    for pid in props:
                        cell = index.get((pid, pv, b, obj, scen))
                        if cell is None:
                            raise SweepError(f"missing cell property={pid} pv={pv} batt={b} "
                                             f"objective={obj} scenario={scen}")
                        v = cell.value(response)
                        if v is not None and not (isinstance(v, float) and math.isnan(v)):
                            got.append(v * scale)
                    if got:
                        vals[i, j] = math.fsum(got) / len(got)
            tables[(metric, scen, obj)] = Table(metric, scen, obj, batt_sizes, pv_sizes, vals)
    return tables


def table_filename(metric: str, scenario: str, objective: str) -> str:
    suffix = "" if objective == COST else "_grid"
    return f"table_{metric}_{scenario}{suffix}.csv"


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_table(table: Table, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["batt_kwh_per_mwh"] + [_fmt(p) for p in table.pv_sizes])
        for b, row in zip(table.batt_sizes, table.values):
            w.writerow([_fmt(b)] + [_fmt(float(v)) for v in row])


def write_tables(tables: dict, out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for (metric, scen, obj), table in sorted(tables.items()):
        path = out_dir / table_filename(metric, scen, obj)
        write_table(table, path)
        paths.append(path)
    return paths


# ---------------------------------------------------------------------------
# long-format cell records

_HEAD = ["property_id", "building_type", "annual_mwh", "summer_share", "daytime_share",
         "pv_size_rel", "batt_size_rel", "objective", "scenario", "pv_kwp", "capacity_kwh",
         "cost_eur"]
_METRIC_FIELDS = [f.name for f in fields(MetricSet)]
_ECON_FIELDS = [f.name for f in fields(ScenarioEconomics) if f.name != "scenario"]


def write_cells(cells: Iterable[SweepCell], path) -> None:
    cells = list(cells)
    caps = [c for c, _ in cells[0].curtailment] if cells else []
    header = _HEAD + _METRIC_FIELDS + _ECON_FIELDS + [f"loss_cap_{c!r}" for c in caps]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for c in cells:
            econ = asdict(c.economics)
            row = [c.property_id, c.building_type, c.annual_mwh, c.summer_share,
                   c.daytime_share, c.pv_size_rel, c.batt_size_rel, c.objective, c.scenario,
                   c.pv_kwp, c.capacity_kwh, c.cost_eur]
            row += [getattr(c.metrics, f) for f in _METRIC_FIELDS]
            row += [econ[f] for f in _ECON_FIELDS]
            row += [loss for _, loss in c.curtailment]
            w.writerow([_fmt(v) for v in row])


def read_cells(path) -> list[SweepCell]:
    def num(s):
        return None if s == "" else float(s)

    cells = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        caps = [h for h in reader.fieldnames or [] if h.startswith("loss_cap_")]
        for lineno, r in enumerate(reader, start=2):
            try:
                m = MetricSet(**{f: float(r[f]) for f in _METRIC_FIELDS})
                e = ScenarioEconomics(scenario=Scenario(r["scenario"]),
                                      **{f: num(r[f]) for f in _ECON_FIELDS})
                cells.append(SweepCell(
                    property_id=r["property_id"], building_type=r["building_type"],
                    annual_mwh=float(r["annual_mwh"]), summer_share=float(r["summer_share"]),
                    daytime_share=float(r["daytime_share"]),
                    pv_size_rel=float(r["pv_size_rel"]), batt_size_rel=float(r["batt_size_rel"]),
                    objective=r["objective"], scenario=r["scenario"], pv_kwp=float(r["pv_kwp"]),
                    capacity_kwh=float(r["capacity_kwh"]), cost_eur=float(r["cost_eur"]),
                    metrics=m, economics=e,
                    curtailment=tuple((float(h[len("loss_cap_"):]), float(r[h]))
                                      for h in caps)))
            except (KeyError, ValueError, TypeError) as exc:
                raise SweepError(f"{path}: line {lineno}: {exc}") from None
    return cells


# ---------------------------------------------------------------------------
# regression inputs


def feature_table(cells: Iterable[SweepCell], profiles=None, *, pv: float, batt: float,
                  response: str = "scr", objective: str = COST, scenario: str = "fit",
                  percent: bool = True, response_scale: float = 100.0) -> DesignMatrix:
    """Regression dataset for one size cell, one row per property.

    Features come from ``profiles`` when given, otherwise from the values
    recorded in the cells. The response is scaled by ``response_scale``
    (percent by default). Building-type dummies are included only when more
    than one type occurs. Properties with an undefined response are dropped.
    """
    objective = canonical_objective(objective)
    by_id = {p.id: p for p in profiles} if profiles is not None else None
    rows = sorted((c for c in cells if c.pv_size_rel == pv and c.batt_size_rel == batt
                   and c.objective == objective and c.scenario == scenario),
                  key=lambda c: c.property_id)
    if not rows:
        raise SweepError(f"no cells at pv={pv}, batt={batt}, objective={objective}, "
                         f"scenario={scenario}")
    types, ec, sc, dc, y = [], [], [], [], []
    for c in rows:
        v = c.value(response)
        if v is None:
            continue
        if by_id is not None:
            p = by_id[c.property_id]
            types.append(p.building_type.value)
            ec.append(p.annual_consumption_mwh)
            sc.append(p.summer_share)
            dc.append(p.daytime_share)
        else:
            types.append(c.building_type)
            ec.append(c.annual_mwh)
            sc.append(c.summer_share)
            dc.append(c.daytime_share)
        y.append(v * response_scale)
    n_types = len(set(types))
    n_cols = 4 + (n_types - 1 if n_types > 1 else 0)
    if len(y) <= n_cols:
        raise SweepError(f"{len(y)} properties cannot support {n_cols} design columns")
    return build_design(types, ec, sc, dc, y, percent=percent, include_types=n_types > 1)
