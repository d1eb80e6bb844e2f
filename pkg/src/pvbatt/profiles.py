"""Load and PV profiles at fixed 15-minute resolution.

Timestamps are naive local time without daylight-saving shifts; an interval
belongs to a calendar window (summer half-year, daytime hours) by its start
time.
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import as_energy_array

__all__ = [
    "STEP_MINUTES",
    "CANONICAL_YEAR",
    "BuildingType",
    "TimeSeries",
    "BuildingProfile",
    "ProfileError",
    "load_series",
    "write_series",
    "load_profile",
    "write_profile",
    "summer_share",
    "daytime_share",
    "generate_synthetic",
    "generate_pv",
    "generate_fleet",
    "ProfileFeatures",
    "intervals_in_year",
]

STEP_MINUTES = 15
CANONICAL_YEAR = 2017
_TS_FORMAT = "%Y-%m-%dT%H:%M"
HEADER = ("timestamp", "energy_kwh")


class ProfileError(ValueError):
    """A profile file or series violates the expected format."""


class BuildingType(str, enum.Enum):
    SCHOOL = "school"
    SCHOOL_WITH_SPORTS_HALL = "school_with_sports_hall"
    SCHOOL_WITH_DAYCARE = "school_with_daycare"
    SCHOOL_SPORTS_DAYCARE = "school_sports_daycare"
    SPORTS_HALL = "sports_hall"
    ADMINISTRATION = "administration"
    NURSING_HOME = "nursing_home"
    MUSEUM = "museum"
    CONFERENCE_HALL = "conference_hall"


def intervals_in_year(year: int = CANONICAL_YEAR, step_minutes: int = STEP_MINUTES) -> int:
    days = (datetime(year + 1, 1, 1) - datetime(year, 1, 1)).days
    return days * 24 * 60 // step_minutes


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Energy per interval in kWh, starting at ``start`` (naive local time)."""

    start: datetime
    values: np.ndarray
    step_minutes: int = STEP_MINUTES

    def __post_init__(self):
        if not isinstance(self.step_minutes, (int, np.integer)) or self.step_minutes <= 0 \
                or 1440 % self.step_minutes:
            raise ProfileError(f"step_minutes must divide a day, got {self.step_minutes!r}")
        values = as_energy_array(self.values, name="values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "start", _as_datetime(self.start))

    def __len__(self):
        return self.values.size

    @property
    def step_hours(self) -> float:
        return self.step_minutes / 60.0

    @property
    def timestamps(self) -> np.ndarray:
        base = np.datetime64(self.start, "m")
        return base + np.arange(len(self), dtype=np.int64) * np.timedelta64(self.step_minutes, "m")

    def total(self) -> float:
        return math.fsum(self.values)

    def scaled(self, factor: float) -> "TimeSeries":
        return TimeSeries(self.start, self.values * factor, self.step_minutes)

    def with_values(self, values) -> "TimeSeries":
        return TimeSeries(self.start, values, self.step_minutes)

    def aligned_with(self, other: "TimeSeries") -> bool:
        return (self.start == other.start and self.step_minutes == other.step_minutes
                and len(self) == len(other))


def _as_datetime(value) -> datetime:
    if isinstance(value, datetime):
        return value.replace(tzinfo=None)
    if isinstance(value, np.datetime64):
        return value.astype("datetime64[m]").astype(datetime)
    if isinstance(value, str):
        return datetime.fromisoformat(value)
    raise ProfileError(f"cannot interpret {value!r} as a timestamp")


def _window_shares(ts: TimeSeries, mask: np.ndarray) -> float:
    total = ts.total()
    if not total > 0:
        raise ProfileError("total energy is zero; share undefined")
    return math.fsum(ts.values[mask]) / total


def summer_mask(ts: TimeSeries) -> np.ndarray:
    month = ts.timestamps.astype("datetime64[M]").astype(np.int64) % 12 + 1
    return (month >= 4) & (month <= 9)


def daytime_mask(ts: TimeSeries, start_hour: int = 8, end_hour: int = 20) -> np.ndarray:
    stamps = ts.timestamps
    minutes = (stamps - stamps.astype("datetime64[D]")).astype(np.int64)
    return (minutes >= start_hour * 60) & (minutes < end_hour * 60)


def summer_share(load: TimeSeries) -> float:
    """Fraction of energy in intervals starting between Apr 1 and Oct 1."""
    return _window_shares(load, summer_mask(load))


def daytime_share(load: TimeSeries) -> float:
    """Fraction of energy in intervals starting in [08:00, 20:00)."""
    return _window_shares(load, daytime_mask(load))


@dataclass(frozen=True, eq=False)
class BuildingProfile:
    id: str
    building_type: BuildingType
    load: TimeSeries
    annual_consumption_mwh: float = field(init=False)
    summer_share: float = field(init=False)
    daytime_share: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "building_type", BuildingType(self.building_type))
        total = self.load.total()
        if not total > 0:
            raise ProfileError(f"profile {self.id!r} has no consumption")
        object.__setattr__(self, "annual_consumption_mwh", total / 1000.0)
        object.__setattr__(self, "summer_share", summer_share(self.load))
        object.__setattr__(self, "daytime_share", daytime_share(self.load))


# ---------------------------------------------------------------------------
# CSV I/O


def load_series(path, expected_intervals: int | None = None,
                step_minutes: int = STEP_MINUTES) -> TimeSeries:
    """Parse a ``timestamp,energy_kwh`` file into a :class:`TimeSeries`."""
    path = Path(path)
    step = timedelta(minutes=step_minutes)
    stamps_start = None
    prev = None
    values = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != HEADER:
            raise ProfileError(f"{path}: line 1: expected header 'timestamp,energy_kwh'")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 2:
                raise ProfileError(f"{path}: line {lineno}: expected 2 fields, got {len(row)}")
            try:
                stamp = datetime.strptime(row[0].strip(), _TS_FORMAT)
            except ValueError:
                raise ProfileError(f"{path}: line {lineno}: bad timestamp {row[0]!r}") from None
            try:
                value = float(row[1])
            except ValueError:
                raise ProfileError(f"{path}: line {lineno}: bad energy value {row[1]!r}") from None
            if not math.isfinite(value):
                raise ProfileError(f"{path}: line {lineno}: non-finite energy value")
            if value < 0:
                raise ProfileError(f"{path}: line {lineno}: negative energy value {value!r}")
            if prev is None:
                stamps_start = stamp
            elif stamp - prev != step:
                raise ProfileError(
                    f"{path}: line {lineno}: timestamp {row[0]} does not follow "
                    f"{prev.strftime(_TS_FORMAT)} by {step_minutes} minutes")
            prev = stamp
            values.append(value)
    if not values:
        raise ProfileError(f"{path}: no data rows")
    if expected_intervals is not None and len(values) != expected_intervals:
        raise ProfileError(
            f"{path}: line {len(values) + 1}: expected {expected_intervals} intervals, "
            f"found {len(values)}")
    return TimeSeries(stamps_start, np.array(values), step_minutes)


def write_series(ts: TimeSeries, path) -> None:
    stamps = ts.timestamps.astype(datetime)
    lines = ["timestamp,energy_kwh"]
    lines += [f"{s.strftime(_TS_FORMAT)},{float(v)!r}" for s, v in zip(stamps, ts.values)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def load_profile(path, building_type, id: str | None = None,
                 expected_intervals: int | None = None) -> BuildingProfile:
    """Read a load profile file and compute its consumption features."""
    ts = load_series(path, expected_intervals=expected_intervals)
    return BuildingProfile(id or Path(path).stem, BuildingType(building_type), ts)


def write_profile(profile: BuildingProfile, path) -> None:
    write_series(profile.load, path)


# ---------------------------------------------------------------------------
# synthetic data

# occupancy window (hours), weekend activity, seasonal amplitude, base share,
# vacation dip, evening activity (sports)
_ARCHETYPES = {
    BuildingType.SCHOOL: dict(open=(7.0, 16.0), weekend=0.0, season=0.30, base=0.35,
                              vacation=0.7, evening=0.0),
    BuildingType.SCHOOL_WITH_SPORTS_HALL: dict(open=(7.0, 16.5), weekend=0.15, season=0.30,
                                               base=0.35, vacation=0.65, evening=0.35),
    BuildingType.SCHOOL_WITH_DAYCARE: dict(open=(6.5, 17.0), weekend=0.0, season=0.28,
                                           base=0.35, vacation=0.5, evening=0.0),
    BuildingType.SCHOOL_SPORTS_DAYCARE: dict(open=(6.5, 17.0), weekend=0.15, season=0.28,
                                             base=0.35, vacation=0.5, evening=0.3),
    BuildingType.SPORTS_HALL: dict(open=(8.0, 14.0), weekend=0.6, season=0.35, base=0.3,
                                   vacation=0.4, evening=1.0),
    BuildingType.ADMINISTRATION: dict(open=(7.0, 18.0), weekend=0.0, season=0.15, base=0.4,
                                      vacation=0.15, evening=0.0),
    BuildingType.NURSING_HOME: dict(open=(6.0, 21.0), weekend=0.9, season=0.12, base=0.55,
                                    vacation=0.0, evening=0.0),
    BuildingType.MUSEUM: dict(open=(9.5, 18.0), weekend=1.0, season=0.05, base=0.45,
                              vacation=0.0, evening=0.0),
    BuildingType.CONFERENCE_HALL: dict(open=(8.0, 22.0), weekend=0.3, season=0.2, base=0.3,
                                       vacation=0.2, evening=0.2),
}

# school holidays in day-of-year ranges (Hesse-like calendar, 2017)
_SCHOOL_HOLIDAYS = [(0, 6), (92, 107), (183, 224), (281, 294), (353, 365)]


def _calendar(year: int, step_minutes: int):
    T = intervals_in_year(year, step_minutes)
    per_day = 1440 // step_minutes
    day = np.arange(T) // per_day
    hour = (np.arange(T) % per_day) * step_minutes / 60.0
    weekday = (day + datetime(year, 1, 1).weekday()) % 7
    return T, day, hour, weekday


def _smooth_window(hour, start, end, width=0.5):
    rise = 1.0 / (1.0 + np.exp(-(hour - start) / (width / 4)))
    fall = 1.0 / (1.0 + np.exp((hour - end) / (width / 4)))
    return rise * fall


def generate_synthetic(kind, annual_mwh: float, seed: int, year: int = CANONICAL_YEAR,
                       step_minutes: int = STEP_MINUTES) -> BuildingProfile:
    """Deterministic synthetic load for a building archetype, scaled to ``annual_mwh``."""
    kind = BuildingType(kind)
    if not annual_mwh > 0:
        raise ValueError("annual_mwh must be positive")
    rng = np.random.default_rng(seed)
    arch = _ARCHETYPES[kind]
    T, day, hour, weekday = _calendar(year, step_minutes)
    n_days = int(day[-1]) + 1

    season = 1.0 + arch["season"] * np.cos(2 * np.pi * (day - 15) / 365.0)
    working = (weekday < 5).astype(float)
    activity = working + (1 - working) * arch["weekend"]
    if arch["vacation"]:
        holiday = np.zeros(n_days, dtype=bool)
        for a, b in _SCHOOL_HOLIDAYS:
            holiday[a:b] = True
        activity = activity * np.where(holiday[day], 1.0 - arch["vacation"], 1.0)
    lo, hi = arch["open"]
    lo = lo + rng.normal(0, 0.25)
    hi = hi + rng.normal(0, 0.25)
    occupied = _smooth_window(hour, lo, hi) * activity
    evening = arch["evening"] * _smooth_window(hour, 16.5, 22.0) * (
        working + (1 - working) * arch["weekend"])

    daily = rng.lognormal(0.0, 0.08, n_days)[day]
    noise = rng.lognormal(0.0, 0.06, T)
    shape = (arch["base"] + (1.0 - arch["base"]) * occupied + evening * 0.8) * season
    values = shape * daily * noise
    values = _scale_exact(values, annual_mwh * 1000.0)
    ts = TimeSeries(datetime(year, 1, 1), values, step_minutes)
    return BuildingProfile(f"synthetic-{kind.value}-{seed}", kind, ts)


def _scale_exact(values: np.ndarray, target: float) -> np.ndarray:
    values = values * (target / math.fsum(values))
    k = int(np.argmax(values))
    values[k] += target - math.fsum(values)
    return values


def generate_pv(seed: int = 0, annual_yield_kwh_per_kwp: float = 988.0,
                year: int = CANONICAL_YEAR, latitude_deg: float = 48.86,
                longitude_deg: float = 8.2, step_minutes: int = STEP_MINUTES) -> TimeSeries:
    """Normalized PV generation (kWh per interval per kW_p) for an east/west array.

    Clear-sky output follows the solar elevation; each day draws a clearness
    index, with an intra-day cloud process on top.
    """
    rng = np.random.default_rng(seed)
    T, day, hour, _ = _calendar(year, step_minutes)
    n_days = int(day[-1]) + 1
    doy = day + 1
    mid = hour + step_minutes / 120.0
    # standard time zone at 15 deg E
    solar_time = mid + (longitude_deg - 15.0) / 15.0
    decl = np.radians(23.44) * np.sin(2 * np.pi * (284 + doy) / 365.0)
    omega = np.radians(15.0 * (solar_time - 12.0))
    phi = np.radians(latitude_deg)
    cosz = np.sin(phi) * np.sin(decl) + np.cos(phi) * np.cos(decl) * np.cos(omega)
    clear = np.clip(cosz, 0.0, None) ** 1.15

    summer_bias = 0.5 + 0.25 * np.sin(2 * np.pi * (np.arange(n_days) - 80) / 365.0)
    a = 1.0 + 4.0 * summer_bias
    clearness = rng.beta(a, 2.5)
    per_interval = np.exp(rng.normal(0.0, 0.18, T))
    cloud = np.clip(0.15 + 0.85 * clearness[day] * per_interval, 0.0, 1.0)
    power = clear * cloud
    values = _scale_exact(power, annual_yield_kwh_per_kwp)
    return TimeSeries(datetime(year, 1, 1), values, step_minutes)


# ---------------------------------------------------------------------------
# sklearn-style feature extraction


class ProfileFeatures(TransformerMixin, BaseEstimator):
    """Map building profiles to regression predictors.

    ``transform`` returns one row per profile with columns annual consumption
    (MWh), summertime share and daytime share; shares are in percent when
    ``percent=True``.
    """

    feature_names = ("EC", "SC", "DC")

    def __init__(self, percent: bool = True):
        self.percent = percent

    def fit(self, X, y=None):
        self.n_features_in_ = 1
        return self

    def transform(self, X):
        factor = 100.0 if self.percent else 1.0
        rows = [(p.annual_consumption_mwh, p.summer_share * factor, p.daytime_share * factor)
                for p in X]
        return np.array(rows, dtype=float).reshape(len(rows), 3)

    def get_feature_names_out(self, input_features=None):
        return np.array(self.feature_names, dtype=object)


def generate_fleet(n: int, seed: int = 0, types=None, annual_range=(30.0, 600.0),
                   year: int = CANONICAL_YEAR) -> list[BuildingProfile]:
    """``n`` synthetic properties cycling through ``types`` with random sizes."""
    types = [BuildingType(t) for t in (types or list(BuildingType))]
    rng = np.random.default_rng(seed)
    lo, hi = annual_range
    fleet = []
    for i in range(n):
        kind = types[i % len(types)]
        annual = float(np.round(rng.uniform(lo, hi), 3))
        prof = generate_synthetic(kind, annual, seed=int(rng.integers(0, 2**31 - 1)), year=year)
        fleet.append(BuildingProfile(f"p{i:03d}-{kind.value}", kind, prof.load))
    return fleet
