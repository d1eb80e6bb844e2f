"""Run configuration from a TOML file.

Every table and key is optional; missing values keep their defaults::

    [system]            # SystemConfig fields (eta_ch, r_ch_max, p_supply, lam, ...)
    [tariffs]           # tiers = [[10, 101.8], [40, 99.0], [inf, 77.8]], market_revenue,
                        # surcharge_self_consumption, surcharge_fit_only
    [costs]             # pv_capex, batt_capex, maintenance_rate, lifetime_years, decay
    [sweep]             # pv_sizes, batt_sizes, objectives, scenarios, cap_fractions
    [solver]            # lp_method = "auto" | "simplex" | "highs"
    [profiles]          # default_type
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .dispatch import SystemConfig
from .profiles import BuildingType
from .sweep import SweepSpec
from .tariffs import CostModel, TariffSchedule

__all__ = ["RunConfig", "ConfigError", "load_config", "parse_config"]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    system: SystemConfig = field(default_factory=SystemConfig)
    costs: CostModel = field(default_factory=CostModel)
    spec: SweepSpec = field(default_factory=SweepSpec)
    surcharge_fit_only: bool = False
    lp_method: str = "auto"
    default_type: BuildingType = BuildingType.SCHOOL


def _take(section: dict, cls, name: str, skip=()) -> dict:
    allowed = {f.name for f in fields(cls) if f.init} - set(skip)
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"[{name}]: unknown keys {sorted(unknown)}")
    return dict(section)


def parse_config(data: dict) -> RunConfig:
    known = {"system", "tariffs", "costs", "sweep", "solver", "profiles"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown sections {sorted(unknown)}")
    try:
        tariff_sec = dict(data.get("tariffs", {}))
        surcharge_fit_only = bool(tariff_sec.pop("surcharge_fit_only", False))
        tariffs = TariffSchedule(**_take(tariff_sec, TariffSchedule, "tariffs"))
        system = SystemConfig(tariffs=tariffs,
                              **_take(data.get("system", {}), SystemConfig, "system",
                                      skip=("tariffs",)))
        costs = CostModel(**_take(data.get("costs", {}), CostModel, "costs"))
        sweep = {k: tuple(v) for k, v in data.get("sweep", {}).items()}
        spec = SweepSpec(**_take(sweep, SweepSpec, "sweep"))
        solver = dict(data.get("solver", {}))
        lp_method = solver.pop("lp_method", "auto")
        if solver:
            raise ConfigError(f"[solver]: unknown keys {sorted(solver)}")
        if lp_method not in ("auto", "simplex", "highs"):
            raise ConfigError(f"[solver]: unknown lp_method {lp_method!r}")
        prof = dict(data.get("profiles", {}))
        default_type = BuildingType(prof.pop("default_type", "school"))
        if prof:
            raise ConfigError(f"[profiles]: unknown keys {sorted(prof)}")
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    return RunConfig(system=system, costs=costs, spec=spec,
                     surcharge_fit_only=surcharge_fit_only, lp_method=lp_method,
                     default_type=default_type)


def load_config(path) -> RunConfig:
    if path is None:
        return RunConfig()
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(data)
