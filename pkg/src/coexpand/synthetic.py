"""Seeded synthetic datasets: the 3-region "desk-EI" fixture and small toys.

desk-EI regions
    A  load centre, poor wind
    B  wind that blows mostly when load is low (anti-correlated)
    C  wind that follows load (correlated)
Interfaces ``BA`` and ``CA`` export into A.

A planning "year" is ``hours`` chronological hours (six weeks by default);
capital and fixed costs are scaled by ``hours / 8760`` so that build and
operating costs keep realistic proportions.
"""
from __future__ import annotations

import numpy as np

from .core import (ChronoSeries, GeneratorType, PlanningHorizon, Region, SystemDataset,
                   TransmissionInterface, reserve_from_peak_fraction)

DESK_EI_SEED = 20240611
DESK_EI_HOURS = 1008
DESK_EI_YEARS = 5
DESK_EI_SCENARIOS = {"n_load_blocks": 20, "n_wind_bins": 1, "peak_fraction": 0.01}
# $/MW overnight cost of the candidate technologies
DESK_EI_CAPEX = {"cc": 1.0e6, "ct": 0.65e6, "wind_A": 3.2e6, "wind": 3.0e6, "line": 0.9e6}
DESK_EI_WIND_MAX = 80


def _ar1(rng, n, phi):
    e = rng.standard_normal(n) * np.sqrt(1.0 - phi * phi)
    out = np.empty(n)
    out[0] = rng.standard_normal()
    for t in range(1, n):
        out[t] = phi * out[t - 1] + e[t]
    return out


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def _load_shape(hours, rng):
    """Normalized system load pattern in roughly [-1, 1]."""
    h = np.arange(hours)
    hod = h % 24
    day = h // 24
    n_days = max(1, hours // 24)
    season = np.cos(2 * np.pi * day / n_days)
    daily = np.exp(-((hod - 18) / 3.5) ** 2) + 0.6 * np.exp(-((hod - 9) / 3.0) ** 2) - 0.5
    weekend = np.where((day % 7) >= 5, -0.15, 0.0)
    return 0.45 * season + 0.55 * daily + weekend + 0.08 * _ar1(rng, hours, 0.9)


def desk_ei(seed: int = DESK_EI_SEED, n_years: int = DESK_EI_YEARS,
            hours: int = DESK_EI_HOURS) -> SystemDataset:
    rng = np.random.default_rng(seed)
    N, T = n_years, hours
    scale = T / 8760.0
    growth = 0.02

    loads = {"A": [], "B": [], "C": []}
    cfs = {"A": [], "B": [], "C": []}
    base = {"A": 5200.0, "B": 1400.0, "C": 1100.0}
    for y in range(N):
        shape = _load_shape(T, rng)
        for r in loads:
            noise = 0.02 * _ar1(rng, T, 0.8)
            loads[r].append(base[r] * (1 + growth) ** y * (1.0 + 0.22 * shape + noise))
        common = _ar1(rng, T, 0.97)
        for r, (mid, load_coupling) in {"A": (-1.3, 0.0), "B": (-0.35, -1.4),
                                        "C": (-0.45, 1.1)}.items():
            own = _ar1(rng, T, 0.96)
            z = mid + 0.8 * own + 0.35 * common + load_coupling * shape
            cfs[r].append(np.clip(_sigmoid(1.6 * z), 0.0, 1.0))

    def series(vals):
        return ChronoSeries(np.concatenate(vals), N, T)

    load_series = {r: series(v) for r, v in loads.items()}
    cf_series = {r: series(v) for r, v in cfs.items()}
    years = lambda v: (float(v),) * N  # noqa: E731

    regions = tuple(
        Region(r, 6000.0, tuple(0.15 * m for m in reserve_from_peak_fraction(load_series[r], 1.0)),
               years(0.0), load_series[r])
        for r in ("A", "B", "C"))

    def thermal(gid, region, cap, existing, capex_per_mw, fom, vom, fuel, heat, emis, max_total,
                max_annual, fuel_growth=0.0, forced=0.05, maint=0.06):
        return GeneratorType(
            id=gid, region=region, kind="thermal", is_renewable=False, unit_capacity=cap,
            existing_units=existing, build_cost_by_year=years(capex_per_mw * cap * scale),
            fixed_om=fom * scale, variable_om=vom,
            fuel_price_by_year=tuple(fuel * (1 + fuel_growth) ** y for y in range(N)),
            heat_rate=heat, emission_rate=emis,
            emission_price_by_year=tuple(25.0 + 2.5 * y for y in range(N)),
            forced_outage_rate=forced, maintenance_outage_rate=maint,
            max_total_builds=max_total, max_annual_builds=(max_annual,) * N)

    def wind(gid, region, existing, capex_per_mw, max_total, max_annual):
        return GeneratorType(
            id=gid, region=region, kind="wind", is_renewable=True, unit_capacity=50.0,
            existing_units=existing, build_cost_by_year=years(capex_per_mw * 50.0 * scale),
            fixed_om=30000.0 * scale, variable_om=0.0, fuel_price_by_year=years(0.0),
            heat_rate=0.0, emission_rate=0.0, emission_price_by_year=years(0.0),
            forced_outage_rate=0.0, maintenance_outage_rate=0.0,
            max_total_builds=max_total, max_annual_builds=(max_annual,) * N,
            cf_series=cf_series[region])

    generators = (
        thermal("A_coal", "A", 500.0, 8, 0.0, 40000.0, 3.0, 2.2, 10.0, 0.95, 0, 0),
        thermal("A_cc", "A", 400.0, 4, 0.0, 15000.0, 2.5, 4.5, 7.0, 0.37, 0, 0, 0.02),
        thermal("A_ct", "A", 100.0, 10, 0.0, 8000.0, 4.0, 4.5, 10.5, 0.55, 0, 0, 0.02),
        thermal("A_cc_new", "A", 400.0, 0, DESK_EI_CAPEX["cc"], 15000.0, 2.5, 4.5, 6.5, 0.35, 8, 3, 0.02),
        thermal("A_ct_new", "A", 100.0, 0, DESK_EI_CAPEX["ct"], 8000.0, 4.0, 4.5, 10.0, 0.53, 20, 6, 0.02),
        wind("A_wind", "A", 0, DESK_EI_CAPEX["wind_A"], 20, 10),
        thermal("B_gas", "B", 200.0, 9, 0.0, 12000.0, 3.0, 4.5, 8.0, 0.42, 0, 0, 0.02),
        thermal("B_ct_new", "B", 100.0, 0, DESK_EI_CAPEX["ct"], 8000.0, 4.0, 4.5, 10.0, 0.53, 10, 4, 0.02),
        wind("B_wind", "B", 4, DESK_EI_CAPEX["wind"], DESK_EI_WIND_MAX, 20),
        thermal("C_coal", "C", 300.0, 5, 0.0, 40000.0, 3.0, 2.2, 10.0, 0.95, 0, 0),
        thermal("C_ct_new", "C", 100.0, 0, DESK_EI_CAPEX["ct"], 8000.0, 4.0, 4.5, 10.0, 0.53, 10, 4, 0.02),
        wind("C_wind", "C", 2, DESK_EI_CAPEX["wind"], DESK_EI_WIND_MAX, 20),
    )
    interfaces = tuple(
        TransmissionInterface(lid, src, "A", 250.0, 1,
                              years(DESK_EI_CAPEX["line"] * 250.0 * scale), 1.0, 8, (3,) * N)
        for lid, src in (("BA", "B"), ("CA", "C"))
    )
    targets = {"A": 500.0, "B": 2000.0, "C": 2000.0}
    return SystemDataset(PlanningHorizon(N, T, 0.05, 2025), regions, generators, interfaces,
                         1.0, targets)


def toy_system(n_years: int = 2, hours: int = 24, seed: int = 0, with_interface=True,
               wind_bounds=(0, 3)) -> SystemDataset:
    """Two-region system small enough for the dense simplex and exhaustive checks."""
    rng = np.random.default_rng(seed)
    N, T = n_years, hours
    h = np.arange(T)
    la = 100 + 30 * np.sin(2 * np.pi * h / 24)
    lb = 60 + 20 * np.cos(2 * np.pi * h / 24)
    grow = np.repeat(1.0 + 0.05 * np.arange(N), T)
    A = Region("A", 1000.0, (10.0,) * N, (0.0,) * N, ChronoSeries(np.tile(la, N) * grow, N, T))
    B = Region("B", 1000.0, (5.0,) * N, (0.0,) * N, ChronoSeries(np.tile(lb, N), N, T))
    wind_cf = ChronoSeries(rng.uniform(0.0, 1.0, N * T), N, T)
    gens = (
        GeneratorType("coalA", "A", "thermal", False, 50.0, 2, (1e5,) * N, 10.0, 2.0, (2.0,) * N,
                      10.0, 1.0, (5.0,) * N, 0.05, 0.05, 2, (1,) * N),
        GeneratorType("gasB", "B", "thermal", False, 40.0, 1, (5e4,) * N, 8.0, 3.0, (4.0,) * N,
                      8.0, 0.5, (5.0,) * N, 0.05, 0.05, 3, (2,) * N),
        GeneratorType("windB", "B", "wind", True, 30.0, wind_bounds[0], (8e4,) * N, 15.0, 0.0,
                      (0.0,) * N, 0.0, 0.0, (0.0,) * N, 0.0, 0.0, wind_bounds[1],
                      (min(2, wind_bounds[1]),) * N, wind_cf),
    )
    ifaces = (TransmissionInterface("BA", "B", "A", 30.0, 1, (3e4,) * N, 1.0, 2, (1,) * N),) \
        if with_interface else ()
    return SystemDataset(PlanningHorizon(N, T, 0.05), (A, B), gens, ifaces,
                         target_wind_caps={"B": 90.0})
