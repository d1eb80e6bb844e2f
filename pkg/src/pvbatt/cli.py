"""Command-line entry point: ``pvbatt run | stats | synth | synth-pv | synth-fleet | dispatch``."""
from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace
from pathlib import Path

from . import lpcore
from .config import load_config
from .dispatch import (
    build_dispatch_lp, dispatch_cost_min, dispatch_grid_friendly, write_trace,
)
from .metrics import compute_scr_ssr
from .profiles import (
    BuildingType, generate_fleet, generate_pv, generate_synthetic, load_profile, load_series,
    write_profile, write_series,
)
from .stats import anova_single, fit_ols, write_regression_report
from .sweep import (
    SweepSpec, aggregate_tables, feature_table, read_cells, run_sweep, write_cells, write_tables,
)

METADATA = "metadata.csv"


def _read_metadata(directory: Path) -> dict:
    path = directory / METADATA
    if not path.exists():
        return {}
    with path.open(encoding="utf-8", newline="") as fh:
        return {row["id"]: BuildingType(row["building_type"]) for row in csv.DictReader(fh)}


def _load_profiles(directory: Path, default_type: BuildingType, expected: int):
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"profile directory {directory} does not exist")
    types = _read_metadata(directory)
    files = sorted(p for p in directory.glob("*.csv") if p.name != METADATA)
    if not files:
        raise FileNotFoundError(f"no profile files in {directory}")
    return [load_profile(f, types.get(f.stem, default_type), id=f.stem,
                         expected_intervals=expected) for f in files]


def cmd_run(args) -> int:
    conf = load_config(args.config)
    spec = conf.spec
    if args.objective:
        spec = replace(spec, objectives=tuple(args.objective))
    if args.scenario:
        spec = replace(spec, scenarios=tuple(args.scenario))
    spec = SweepSpec(spec.pv_sizes, spec.batt_sizes, spec.objectives, spec.scenarios,
                     spec.cap_fractions)
    pv = load_series(args.pv_profile)
    profiles = _load_profiles(Path(args.profiles), conf.default_type, len(pv))
    cells = run_sweep(profiles, pv, spec, conf.system, conf.costs, jobs=args.jobs,
                      surcharge_fit_only=conf.surcharge_fit_only, lp_method=conf.lp_method)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_cells(cells, out / "cells.csv")
    paths = write_tables(aggregate_tables(cells), out)
    print(f"{len(cells)} cells, {len(paths)} tables written to {out}")
    return 0


def _size_tag(pv: float, batt: float) -> str:
    return f"pv{pv:g}_batt{batt:g}"


def cmd_stats(args) -> int:
    cells = read_cells(args.cells)
    design = feature_table(cells, pv=args.pv, batt=args.batt, response=args.response,
                           objective=args.objective, scenario=args.scenario)
    fit = fit_ols(design)
    out = Path(args.out) if args.out else Path(args.cells).parent
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"regression_{args.response}_{_size_tag(args.pv, args.batt)}.csv"
    write_regression_report(fit, path)
    print(f"n={fit.n} R2={fit.r_squared:.4f} F={fit.f_statistic:.4g} "
          f"p={fit.f_p_value:.3g} AIC={fit.aic:.2f}")
    for row in fit.table():
        print(f"  {row['term']:<32} {row['estimate']:>12.5g}  se={row['se']:.3g}  "
              f"t={row['t']:.3g}  p={row['p']:.3g}")
    # single-predictor variance shares
    cols = list(design.columns)
    type_cols = [j for j, c in enumerate(cols) if c.startswith("type[")]
    blocks = ([("building_type", type_cols)] if type_cols else []) + \
        [(c, [cols.index(c)]) for c in ("EC", "SC", "DC")]
    for name, idx in blocks:
        r2, f, p = anova_single(design.X[:, idx], design.y)
        print(f"  ANOVA {name:<14} R2={r2:.4f} F={f:.4g} p={p:.3g}")
    print(f"report written to {path}")
    return 0


def cmd_synth(args) -> int:
    prof = generate_synthetic(args.type, args.annual_mwh, args.seed)
    write_profile(prof, args.out)
    print(f"{prof.id}: {prof.annual_consumption_mwh:g} MWh, summer share "
          f"{prof.summer_share:.3f}, daytime share {prof.daytime_share:.3f}")
    return 0


def cmd_synth_pv(args) -> int:
    pv = generate_pv(seed=args.seed, annual_yield_kwh_per_kwp=args.yield_kwh)
    write_series(pv, args.out)
    print(f"PV profile: {pv.total():g} kWh/kWp per year")
    return 0


def cmd_synth_fleet(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fleet = generate_fleet(args.n, seed=args.seed)
    lines = ["id,building_type"]
    for prof in fleet:
        write_profile(prof, out / f"{prof.id}.csv")
        lines.append(f"{prof.id},{prof.building_type.value}")
    (out / METADATA).write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"{len(fleet)} profiles written to {out}")
    return 0


def cmd_dispatch(args) -> int:
    conf = load_config(args.config)
    load = load_series(args.load)
    pv_norm = load_series(args.pv_profile, expected_intervals=len(load))
    annual = load.total() / 1000.0
    cfg = conf.system.with_sizes(pv_size_rel=args.pv, batt_size_rel=args.batt)
    pv = pv_norm.scaled(args.pv * annual)
    if args.dump_lp:
        objective = "cost" if args.objective == "cost" else "weighted"
        lpcore.dump_lp(build_dispatch_lp(load, pv, cfg, objective), args.dump_lp)
    if args.objective == "cost":
        res = dispatch_cost_min(load, pv, cfg)
    else:
        res = dispatch_grid_friendly(load, pv, cfg, lp_method=conf.lp_method)
    if args.trace:
        write_trace(res, args.trace)
    m = compute_scr_ssr(res)
    print(f"cost={res.cost_eur:.2f} EUR SCR={m.scr:.4f} SSR={m.ssr:.4f} "
          f"peak={m.peak_feed_in_pct_of_pv:.4f} of PV")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pvbatt", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the size and scenario sweep")
    p.add_argument("--profiles", required=True, help="directory of load profile CSV files")
    p.add_argument("--pv-profile", required=True, help="normalized PV profile (kWh per kWp)")
    p.add_argument("--config", help="TOML configuration file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--objective", action="append", choices=["cost", "grid"])
    p.add_argument("--scenario", action="append", choices=["fit", "market", "none"])
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("stats", help="regress a sweep response on building features")
    p.add_argument("--cells", required=True, help="cells.csv from a run")
    p.add_argument("--response", default="scr",
                   choices=["scr", "ssr", "irr", "irr_battery", "be"])
    p.add_argument("--pv", type=float, required=True)
    p.add_argument("--batt", type=float, required=True)
    p.add_argument("--objective", default="cost", choices=["cost", "grid"])
    p.add_argument("--scenario", default="fit", choices=["fit", "market", "none"])
    p.add_argument("--out", help="output directory (default: next to the cells file)")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("synth", help="write a synthetic load profile")
    p.add_argument("--type", required=True, choices=[t.value for t in BuildingType])
    p.add_argument("--annual-mwh", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("synth-pv", help="write a synthetic normalized PV profile")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--yield-kwh", type=float, default=988.0, help="annual kWh per kWp")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth_pv)

    p = sub.add_parser("synth-fleet", help="write a directory of synthetic profiles")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth_fleet)

    p = sub.add_parser("dispatch", help="dispatch one property and write a trace")
    p.add_argument("--load", required=True)
    p.add_argument("--pv-profile", required=True)
    p.add_argument("--pv", type=float, default=1.0, help="kWp per MWh")
    p.add_argument("--batt", type=float, default=1.0, help="kWh per MWh")
    p.add_argument("--objective", default="cost", choices=["cost", "grid"])
    p.add_argument("--config")
    p.add_argument("--trace", help="write the per-interval trace CSV here")
    p.add_argument("--dump-lp", help="write the dispatch LP in text form here")
    p.set_defaults(func=cmd_dispatch)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:
        msg = " ".join(str(exc).split())
        print(f"pvbatt: error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
