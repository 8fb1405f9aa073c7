"""CSV + YAML dataset ingestion and canonical serialization.

Layout of a dataset directory::

    config.yaml
    regions.csv       id, voll, reserve_margin | reserve_margin_frac, rps, load_series
    generators.csv    id, region, kind, is_renewable, unit_capacity, existing_units,
                      build_cost, fixed_om, variable_om, fuel_price, heat_rate,
                      emission_rate, emission_price, forced_outage_rate,
                      maintenance_outage_rate, max_total_builds, max_annual_builds,
                      cf_series
    interfaces.csv    id, from_region, to_region, unit_capacity, existing_units,
                      build_cost, wheeling_cost, max_total_builds, max_annual_builds
    series/<id>.csv   year, hour, value     (year 1-based, hour 0-based)

Per-year columns take either one scalar or ``;``-separated values, one per year.
"""
from __future__ import annotations

import csv
import hashlib
import io
import os
from pathlib import Path

import numpy as np
import yaml

from .core import (ChronoSeries, GeneratorType, PlanningHorizon, Region, SystemDataset,
                   TransmissionInterface, broadcast, broadcast_int, reserve_from_peak_fraction)

REGION_COLUMNS = ("id", "voll", "reserve_margin", "reserve_margin_frac", "rps", "load_series")
REGION_REQUIRED = ("id", "voll", "load_series")
GENERATOR_COLUMNS = (
    "id", "region", "kind", "is_renewable", "unit_capacity", "existing_units", "build_cost",
    "fixed_om", "variable_om", "fuel_price", "heat_rate", "emission_rate", "emission_price",
    "forced_outage_rate", "maintenance_outage_rate", "max_total_builds", "max_annual_builds",
    "cf_series",
)
GENERATOR_OPTIONAL = {
    "fixed_om": "0", "variable_om": "0", "fuel_price": "0", "heat_rate": "0",
    "emission_rate": "0", "emission_price": "0", "forced_outage_rate": "0",
    "maintenance_outage_rate": "0", "max_total_builds": "0", "max_annual_builds": "",
    "cf_series": "", "is_renewable": "",
}
INTERFACE_COLUMNS = ("id", "from_region", "to_region", "unit_capacity", "existing_units",
                     "build_cost", "wheeling_cost", "max_total_builds", "max_annual_builds")
INTERFACE_OPTIONAL = {"wheeling_cost": "0", "max_total_builds": "0", "max_annual_builds": ""}
SERIES_COLUMNS = ("year", "hour", "value")

CONFIG_SECTIONS = {
    "horizon": {"n_years", "hours_per_year", "discount_rate", "base_year"},
    "reserve": {"import_credit"},
    "target_wind_caps": None,
    "scenarios": {"n_load_blocks", "n_wind_bins", "peak_fraction"},
}
DEFAULT_SCENARIO_SETTINGS = {"n_load_blocks": 20, "n_wind_bins": 1, "peak_fraction": 0.01}


class DatasetFormatError(ValueError):
    """Malformed or unreadable dataset files."""


def _read_csv(path: Path, allowed, required) -> list:
    if not path.exists():
        raise DatasetFormatError(f"missing file {path}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        cols = reader.fieldnames or []
        unknown = [c for c in cols if c not in allowed]
        if unknown:
            raise DatasetFormatError(f"{path.name}: unknown columns {unknown}")
        missing = [c for c in required if c not in cols]
        if missing:
            raise DatasetFormatError(f"{path.name}: missing columns {missing}")
        return [{k: (v or "").strip() for k, v in row.items()} for row in reader]


def _per_year(text: str, n: int, cast=float):
    parts = [p for p in text.split(";")] if text != "" else []
    try:
        vals = [cast(p) for p in parts]
    except ValueError as exc:
        raise DatasetFormatError(f"bad per-year value {text!r}") from exc
    if not vals:
        raise DatasetFormatError("empty per-year value")
    return broadcast_int(vals, n) if cast is int else broadcast(vals, n)


def _bool(text: str, default: bool) -> bool:
    t = text.lower()
    if t == "":
        return default
    if t in ("1", "true", "yes"):
        return True
    if t in ("0", "false", "no"):
        return False
    raise DatasetFormatError(f"not a boolean: {text!r}")


def _num(row, key, cast=float):
    try:
        return cast(row[key])
    except (KeyError, ValueError) as exc:
        raise DatasetFormatError(f"row {row.get('id', '?')}: bad {key} {row.get(key)!r}") from exc


def read_series(path: Path, n_years: int, hours: int) -> ChronoSeries:
    rows = _read_csv(path, SERIES_COLUMNS, SERIES_COLUMNS)
    vals = np.full((n_years, hours), np.nan)
    for row in rows:
        y, h = int(row["year"]), int(row["hour"])
        if not (1 <= y <= n_years and 0 <= h < hours):
            raise DatasetFormatError(f"{path.name}: (year {y}, hour {h}) outside horizon")
        vals[y - 1, h] = float(row["value"])
    if np.isnan(vals).any():
        raise DatasetFormatError(f"{path.name}: {int(np.isnan(vals).sum())} hours missing")
    return ChronoSeries(vals, n_years, hours)


def read_config(path: Path) -> dict:
    if not path.exists():
        raise DatasetFormatError(f"missing file {path}")
    try:
        doc = yaml.safe_load(path.read_text()) or {}
    except yaml.YAMLError as exc:
        raise DatasetFormatError(f"{path.name}: {exc}") from exc
    for sec, body in doc.items():
        if sec not in CONFIG_SECTIONS:
            raise DatasetFormatError(f"config: unknown section {sec!r}")
        keys = CONFIG_SECTIONS[sec]
        if keys is not None:
            extra = set(body or {}) - keys
            if extra:
                raise DatasetFormatError(f"config.{sec}: unknown keys {sorted(extra)}")
    if "horizon" not in doc:
        raise DatasetFormatError("config: horizon section is required")
    return doc


def read_dataset(path) -> tuple:
    """Load a dataset directory; returns ``(SystemDataset, scenario_settings)``."""
    root = Path(path)
    cfg = read_config(root / "config.yaml")
    hz = cfg["horizon"]
    try:
        horizon = PlanningHorizon(int(hz["n_years"]), int(hz["hours_per_year"]),
                                  float(hz["discount_rate"]), int(hz.get("base_year", 2025)))
    except KeyError as exc:
        raise DatasetFormatError(f"config.horizon: missing {exc}") from exc
    N, T = horizon.n_years, horizon.hours_per_year
    cache = {}

    def series(name):
        if name not in cache:
            cache[name] = read_series(root / "series" / f"{name}.csv", N, T)
        return cache[name]

    regions = []
    for row in _read_csv(root / "regions.csv", REGION_COLUMNS, REGION_REQUIRED):
        load = series(row["load_series"])
        has_mw = row.get("reserve_margin", "") != ""
        has_frac = row.get("reserve_margin_frac", "") != ""
        if has_mw == has_frac:
            raise DatasetFormatError(
                f"region {row['id']}: give exactly one of reserve_margin, reserve_margin_frac")
        if has_mw:
            reserve = _per_year(row["reserve_margin"], N)
        else:
            frac = _per_year(row["reserve_margin_frac"], N)
            reserve = tuple(f * m for f, m in zip(frac, reserve_from_peak_fraction(load, 1.0)))
        regions.append(Region(row["id"], _num(row, "voll"), reserve,
                              _per_year(row.get("rps", "") or "0", N), load))

    gens = []
    gen_required = [c for c in GENERATOR_COLUMNS if c not in GENERATOR_OPTIONAL]
    for row in _read_csv(root / "generators.csv", GENERATOR_COLUMNS, gen_required):
        row = {**GENERATOR_OPTIONAL, **{k: v for k, v in row.items() if v != ""}}
        kind = row["kind"]
        max_total = _num(row, "max_total_builds", int)
        gens.append(GeneratorType(
            id=row["id"], region=row["region"], kind=kind,
            is_renewable=_bool(row["is_renewable"], kind in ("wind", "solar", "hydro")),
            unit_capacity=_num(row, "unit_capacity"),
            existing_units=_num(row, "existing_units", int),
            build_cost_by_year=_per_year(row["build_cost"], N),
            fixed_om=_num(row, "fixed_om"), variable_om=_num(row, "variable_om"),
            fuel_price_by_year=_per_year(row["fuel_price"], N),
            heat_rate=_num(row, "heat_rate"), emission_rate=_num(row, "emission_rate"),
            emission_price_by_year=_per_year(row["emission_price"], N),
            forced_outage_rate=_num(row, "forced_outage_rate"),
            maintenance_outage_rate=_num(row, "maintenance_outage_rate"),
            max_total_builds=max_total,
            max_annual_builds=_per_year(row["max_annual_builds"] or str(max_total), N, int),
            cf_series=series(row["cf_series"]) if row["cf_series"] else None,
        ))

    ifaces = []
    if_required = [c for c in INTERFACE_COLUMNS if c not in INTERFACE_OPTIONAL]
    for row in _read_csv(root / "interfaces.csv", INTERFACE_COLUMNS, if_required):
        row = {**INTERFACE_OPTIONAL, **{k: v for k, v in row.items() if v != ""}}
        max_total = _num(row, "max_total_builds", int)
        ifaces.append(TransmissionInterface(
            id=row["id"], from_region=row["from_region"], to_region=row["to_region"],
            unit_capacity=_num(row, "unit_capacity"),
            existing_units=_num(row, "existing_units", int),
            build_cost_by_year=_per_year(row["build_cost"], N),
            wheeling_cost=_num(row, "wheeling_cost"),
            max_total_builds=max_total,
            max_annual_builds=_per_year(row["max_annual_builds"] or str(max_total), N, int),
        ))

    credit = float((cfg.get("reserve") or {}).get("import_credit", 1.0))
    targets = {str(k): float(v) for k, v in (cfg.get("target_wind_caps") or {}).items()}
    settings = {**DEFAULT_SCENARIO_SETTINGS, **(cfg.get("scenarios") or {})}
    ds = SystemDataset(horizon, tuple(regions), tuple(gens), tuple(ifaces), credit, targets)
    return ds, settings


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    f = float(v)
    if f == int(f) and abs(f) < 1e15:
        return str(int(f))
    return repr(f)


def _fmt_years(vals) -> str:
    vals = list(vals)
    if all(v == vals[0] for v in vals):
        return _fmt(vals[0])
    return ";".join(_fmt(v) for v in vals)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _series_text(s: ChronoSeries) -> str:
    rows = [(y + 1, h, _fmt(s.values[y, h])) for y in range(s.years) for h in range(s.hours)]
    return _csv_text(SERIES_COLUMNS, rows)


def dataset_files(ds: SystemDataset, settings=None) -> dict:
    """Canonical text of every file of ``ds``, keyed by relative path."""
    files = {}
    named = {}

    def series_name(obj_id, s, suffix):
        name = f"{obj_id}_{suffix}"
        named[name] = s
        return name

    regions = [(r.id, _fmt(r.voll), _fmt_years(r.reserve_margin_by_year), "",
                _fmt_years(r.rps_by_year), series_name(r.id, r.load_series, "load"))
               for r in ds.regions]
    files["regions.csv"] = _csv_text(REGION_COLUMNS, regions)
    gens = []
    for g in ds.generators:
        cf = series_name(g.id, g.cf_series, "cf") if g.cf_series is not None else ""
        gens.append((g.id, g.region, g.kind, _fmt(g.is_renewable), _fmt(g.unit_capacity),
                     _fmt(g.existing_units), _fmt_years(g.build_cost_by_year), _fmt(g.fixed_om),
                     _fmt(g.variable_om), _fmt_years(g.fuel_price_by_year), _fmt(g.heat_rate),
                     _fmt(g.emission_rate), _fmt_years(g.emission_price_by_year),
                     _fmt(g.forced_outage_rate), _fmt(g.maintenance_outage_rate),
                     _fmt(g.max_total_builds), _fmt_years(g.max_annual_builds), cf))
    files["generators.csv"] = _csv_text(GENERATOR_COLUMNS, gens)
    files["interfaces.csv"] = _csv_text(INTERFACE_COLUMNS, [
        (l.id, l.from_region, l.to_region, _fmt(l.unit_capacity), _fmt(l.existing_units),
         _fmt_years(l.build_cost_by_year), _fmt(l.wheeling_cost), _fmt(l.max_total_builds),
         _fmt_years(l.max_annual_builds)) for l in ds.interfaces])
    for name, s in sorted(named.items()):
        files[f"series/{name}.csv"] = _series_text(s)
    hz = ds.horizon
    cfg = {
        "horizon": {"n_years": hz.n_years, "hours_per_year": hz.hours_per_year,
                    "discount_rate": hz.discount_rate, "base_year": hz.base_year},
        "reserve": {"import_credit": ds.reserve_import_credit},
        "target_wind_caps": {k: float(v) for k, v in sorted(ds.target_wind_caps.items())},
        "scenarios": {**DEFAULT_SCENARIO_SETTINGS, **(settings or {})},
    }
    files["config.yaml"] = yaml.safe_dump(cfg, sort_keys=True)
    return files


def write_dataset(ds: SystemDataset, path, settings=None) -> Path:
    root = Path(path)
    for rel, text in dataset_files(ds, settings).items():
        target = root / rel
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text)
    return root


def fingerprint(ds: SystemDataset) -> str:
    """SHA-256 of the canonical serialization (scenario settings excluded)."""
    h = hashlib.sha256()
    for rel, text in sorted(dataset_files(ds).items()):
        if rel == "config.yaml":
            cfg = yaml.safe_load(text)
            cfg.pop("scenarios", None)
            text = yaml.safe_dump(cfg, sort_keys=True)
        h.update(rel.encode())
        h.update(b"\0")
        h.update(text.encode())
        h.update(b"\0")
    return h.hexdigest()


def write_atomic(directory, files: dict) -> Path:
    """Write ``{relative path: text}`` into ``directory`` via a sibling temp dir + rename.

    An existing ``directory`` is replaced only if every file in it would be
    rewritten, so a mistyped path cannot wipe unrelated data.
    """
    import shutil
    import tempfile

    target = Path(directory)
    if target.exists():
        present = {p.relative_to(target).as_posix() for p in target.rglob("*") if p.is_file()}
        if not target.is_dir() or not present <= set(files):
            raise FileExistsError(f"{target} exists and holds files this writer did not produce")
    target.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{target.name}.", dir=target.parent))
    try:
        for rel, text in sorted(files.items()):
            p = tmp / rel
            p.parent.mkdir(parents=True, exist_ok=True)
            with open(p, "w", newline="") as fh:
                fh.write(text)
        if target.exists():
            shutil.rmtree(target)
        os.replace(tmp, target)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return target
