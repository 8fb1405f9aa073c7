"""Domain types for multi-region expansion planning and dataset validation."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

KINDS = ("thermal", "wind", "solar", "hydro", "other")
CF_KINDS = ("wind", "solar")


class ChronoSeries:
    """Chronological values indexed year-major as ``(year, hour)``."""

    def __init__(self, values, years: int, hours: int):
        arr = np.asarray(values, dtype=float)
        if arr.size != years * hours:
            raise ValueError(
                f"series has {arr.size} values, expected {years} x {hours}"
            )
        self.values = arr.reshape(years, hours)
        self.values.setflags(write=False)
        self.years = int(years)
        self.hours = int(hours)

    def year(self, y: int) -> np.ndarray:
        """Hourly values of year index ``y`` (0-based)."""
        return self.values[y]

    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    def __len__(self):
        return self.years * self.hours

    def __repr__(self):
        return f"ChronoSeries(years={self.years}, hours={self.hours})"


@dataclass(frozen=True)
class PlanningHorizon:
    n_years: int
    hours_per_year: int
    discount_rate: float
    base_year: int = 2025


@dataclass(frozen=True)
class Region:
    id: str
    voll: float
    reserve_margin_by_year: tuple
    rps_by_year: tuple
    load_series: ChronoSeries


@dataclass(frozen=True)
class GeneratorType:
    id: str
    region: str
    kind: str
    is_renewable: bool
    unit_capacity: float
    existing_units: int
    build_cost_by_year: tuple
    fixed_om: float
    variable_om: float
    fuel_price_by_year: tuple
    heat_rate: float
    emission_rate: float
    emission_price_by_year: tuple
    forced_outage_rate: float = 0.0
    maintenance_outage_rate: float = 0.0
    max_total_builds: int = 0
    max_annual_builds: tuple = ()
    cf_series: Optional[ChronoSeries] = None

    @property
    def uses_cf(self) -> bool:
        return self.kind in CF_KINDS


@dataclass(frozen=True)
class TransmissionInterface:
    id: str
    from_region: str
    to_region: str
    unit_capacity: float
    existing_units: int
    build_cost_by_year: tuple
    wheeling_cost: float
    max_total_builds: int = 0
    max_annual_builds: tuple = ()


@dataclass(frozen=True)
class SystemDataset:
    horizon: PlanningHorizon
    regions: tuple
    generators: tuple
    interfaces: tuple
    reserve_import_credit: float = 1.0
    target_wind_caps: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("regions", "generators", "interfaces"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    @property
    def region_ids(self) -> list:
        return [r.id for r in self.regions]

    def region(self, rid: str) -> Region:
        for r in self.regions:
            if r.id == rid:
                return r
        raise KeyError(f"unknown region {rid!r}")

    def generators_in(self, rid: str) -> list:
        return [g for g in self.generators if g.region == rid]

    def replace(self, **changes) -> "SystemDataset":
        from dataclasses import replace

        return replace(self, **changes)


def _is_years(values, n_years) -> bool:
    return isinstance(values, (tuple, list, np.ndarray)) and len(values) == n_years


def _check_by_year(report, who, name, values, n_years, lo=None, hi=None):
    if not isinstance(values, (tuple, list, np.ndarray)):
        report.append(f"{who}: {name} must be a per-year sequence")
        return
    if len(values) != n_years:
        report.append(f"{who}: {name} has length {len(values)}, expected {n_years}")
        return
    for v in values:
        if not np.isfinite(v):
            report.append(f"{who}: {name} contains non-finite value")
            return
        if lo is not None and v < lo:
            report.append(f"{who}: {name} value {v} below {lo}")
            return
        if hi is not None and v > hi:
            report.append(f"{who}: {name} value {v} above {hi}")
            return


def _check_series(report, who, name, series, horizon, lo=0.0, hi=None):
    if series is None:
        report.append(f"{who}: missing {name}")
        return
    if series.years != horizon.n_years or series.hours != horizon.hours_per_year:
        report.append(
            f"{who}: {name} shape ({series.years}, {series.hours}) does not match "
            f"horizon ({horizon.n_years}, {horizon.hours_per_year})"
        )
        return
    v = series.values
    if not np.all(np.isfinite(v)):
        report.append(f"{who}: {name} contains non-finite values")
    elif v.min() < lo:
        report.append(f"{who}: {name} negative value {v.min()}")
    elif hi is not None and v.max() > hi:
        label = "cf out of [0,1]" if name == "cf_series" else f"{name} above {hi}"
        report.append(f"{who}: {label} (max {v.max()})")


def validate_dataset(ds: SystemDataset) -> list:
    """Check every type invariant of ``ds``.

    Returns a list of human-readable violations, each naming the offending
    entity. An empty list means the dataset is well formed. Violations are
    reported in a canonical order so the result does not depend on the
    order of the entity lists.
    """
    report: list = []
    hz = ds.horizon
    if hz.n_years < 1:
        report.append(f"horizon: n_years {hz.n_years} < 1")
    if hz.hours_per_year < 1:
        report.append(f"horizon: hours_per_year {hz.hours_per_year} < 1")
    if not hz.discount_rate >= 0:
        report.append(f"horizon: discount_rate {hz.discount_rate} < 0")
    if not 0.0 <= ds.reserve_import_credit <= 1.0:
        report.append(f"dataset: reserve_import_credit {ds.reserve_import_credit} not in [0,1]")
    if report:
        return sorted(report)

    ny = hz.n_years
    region_ids = [r.id for r in ds.regions]
    for kind, ids in (
        ("region", region_ids),
        ("generator", [g.id for g in ds.generators]),
        ("interface", [i.id for i in ds.interfaces]),
    ):
        seen = set()
        for i in ids:
            if i in seen:
                report.append(f"{kind} {i}: duplicate identifier")
            seen.add(i)
            if not i or any(c.isspace() for c in i):
                report.append(f"{kind} {i!r}: identifier must be non-empty without whitespace")

    for r in ds.regions:
        who = f"region {r.id}"
        if not r.voll >= 0:
            report.append(f"{who}: voll {r.voll} < 0")
        _check_by_year(report, who, "reserve_margin_by_year", r.reserve_margin_by_year, ny, lo=0.0)
        _check_by_year(report, who, "rps_by_year", r.rps_by_year, ny, lo=0.0, hi=1.0)
        _check_series(report, who, "load_series", r.load_series, hz)

    known = set(region_ids)
    for g in ds.generators:
        who = f"generator {g.id}"
        if g.region not in known:
            report.append(f"{who}: unknown region {g.region!r}")
        if g.kind not in KINDS:
            report.append(f"{who}: unknown kind {g.kind!r}")
        if not g.unit_capacity > 0:
            report.append(f"{who}: unit_capacity {g.unit_capacity} must be > 0")
        if g.existing_units < 0:
            report.append(f"{who}: existing_units {g.existing_units} < 0")
        for name in ("forced_outage_rate", "maintenance_outage_rate"):
            v = getattr(g, name)
            if not 0.0 <= v < 1.0:
                report.append(f"{who}: {name} {v} not in [0,1)")
        for name in ("fixed_om", "variable_om", "heat_rate", "emission_rate"):
            v = getattr(g, name)
            if not (np.isfinite(v) and v >= 0):
                report.append(f"{who}: {name} {v} must be finite and >= 0")
        for name in ("build_cost_by_year", "fuel_price_by_year", "emission_price_by_year"):
            _check_by_year(report, who, name, getattr(g, name), ny, lo=0.0)
        if g.max_total_builds < 0:
            report.append(f"{who}: max_total_builds {g.max_total_builds} < 0")
        _check_by_year(report, who, "max_annual_builds", g.max_annual_builds, ny, lo=0)
        if _is_years(g.max_annual_builds, ny) and any(
            a > g.max_total_builds for a in g.max_annual_builds
        ):
            report.append(f"{who}: max_annual_builds exceeds max_total_builds")
        if g.uses_cf:
            _check_series(report, who, "cf_series", g.cf_series, hz, lo=0.0, hi=1.0)
        elif g.cf_series is not None:
            report.append(f"{who}: cf_series given for non-variable kind {g.kind!r}")

    for l in ds.interfaces:
        who = f"interface {l.id}"
        if l.from_region == l.to_region:
            report.append(f"{who}: from_region equals to_region ({l.from_region})")
        for end in (l.from_region, l.to_region):
            if end not in known:
                report.append(f"{who}: unknown region {end!r}")
        if not l.unit_capacity > 0:
            report.append(f"{who}: unit_capacity {l.unit_capacity} must be > 0")
        if l.existing_units < 0:
            report.append(f"{who}: existing_units {l.existing_units} < 0")
        if not l.wheeling_cost >= 0:
            report.append(f"{who}: wheeling_cost {l.wheeling_cost} < 0")
        _check_by_year(report, who, "build_cost_by_year", l.build_cost_by_year, ny, lo=0.0)
        if l.max_total_builds < 0:
            report.append(f"{who}: max_total_builds {l.max_total_builds} < 0")
        _check_by_year(report, who, "max_annual_builds", l.max_annual_builds, ny, lo=0)
        if _is_years(l.max_annual_builds, ny) and any(
            a > l.max_total_builds for a in l.max_annual_builds
        ):
            report.append(f"{who}: max_annual_builds exceeds max_total_builds")

    for rid, cap in ds.target_wind_caps.items():
        if rid not in known:
            report.append(f"target_wind_caps: unknown region {rid!r}")
        elif not cap >= 0:
            report.append(f"target_wind_caps: negative capacity for {rid}")
    return sorted(report)


def interface_incidence(ds: SystemDataset, region_id: str) -> list:
    """Signed interfaces touching ``region_id``.

    Positive flow runs from ``from_region`` to ``to_region``, so an interface
    carries sign +1 at its receiving end and -1 at its sending end.
    """
    if region_id not in ds.region_ids:
        raise KeyError(f"unknown region {region_id!r}")
    out = []
    for l in ds.interfaces:
        if l.to_region == region_id:
            out.append((l.id, 1))
        elif l.from_region == region_id:
            out.append((l.id, -1))
    return out


def check_dataset(ds: SystemDataset) -> SystemDataset:
    """Raise ``ValueError`` listing all violations if ``ds`` is malformed."""
    if not isinstance(ds, SystemDataset):
        raise TypeError(f"expected SystemDataset, got {type(ds).__name__}")
    report = validate_dataset(ds)
    if report:
        raise ValueError("invalid dataset:\n  " + "\n  ".join(report))
    return ds


def broadcast(value, n: int) -> tuple:
    """Expand a scalar (or length-n sequence) into a length-n tuple."""
    if isinstance(value, (list, tuple, np.ndarray)):
        vals = tuple(float(v) for v in value)
        if len(vals) == 1:
            return vals * n
        return vals
    return (float(value),) * n


def broadcast_int(value, n: int) -> tuple:
    return tuple(int(round(v)) for v in broadcast(value, n))


def reserve_from_peak_fraction(load: ChronoSeries, fraction: float) -> tuple:
    """Reserve margin in MW per year as a fraction of that year's peak load."""
    return tuple(float(fraction * load.year(y).max()) for y in range(load.years))


def total_load(ds: SystemDataset, year: int) -> np.ndarray:
    """System-total hourly load for year index ``year``."""
    return np.sum([r.load_series.year(year) for r in ds.regions], axis=0)


def region_wind_cf(ds: SystemDataset, region_id: str, year: int) -> Optional[np.ndarray]:
    """Capacity-weighted mean wind cf of a region, or None if it has no wind."""
    winds = [g for g in ds.generators_in(region_id) if g.kind == "wind" and g.cf_series is not None]
    if not winds:
        return None
    w = np.array([g.unit_capacity * max(g.existing_units + g.max_total_builds, 1) for g in winds])
    cfs = np.array([g.cf_series.year(year) for g in winds])
    return (w[:, None] * cfs).sum(axis=0) / w.sum()


__all__: Sequence[str] = [
    "ChronoSeries",
    "PlanningHorizon",
    "Region",
    "GeneratorType",
    "TransmissionInterface",
    "SystemDataset",
    "validate_dataset",
    "interface_incidence",
    "check_dataset",
]
