"""Chronology-preserving scenario creation for multi-region load and wind.

A year of hourly data is reduced to probability-weighted scenarios in
three steps: the system load duration curve is cut into blocks by an exact
least-squares fit, each block is split into wind sub-scenarios by quantiles
of a capacity-weighted system wind capacity factor, and every regional
series is then averaged over the member hours of each scenario, so all
regions share the same chronological hours.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .core import SystemDataset, check_dataset, region_wind_cf, total_load


@dataclass(frozen=True)
class Scenario:
    probability: float
    duration_hours: int
    load_by_region: dict
    cf_by_generator: dict
    system_load: float


@dataclass(frozen=True)
class LoadBlocks:
    values: np.ndarray
    probabilities: np.ndarray
    block_of_hour: np.ndarray
    sse: float


class ScenarioSet:
    """Per-year scenario lists plus the hour-to-scenario map of each year."""

    def __init__(self, years, chronology, n_load_blocks, n_wind_bins, region_ids,
                 cf_generator_ids, synchronized=True):
        self.years = years
        self.chronology = chronology
        self.n_load_blocks = n_load_blocks
        self.n_wind_bins = n_wind_bins
        self.region_ids = list(region_ids)
        self.cf_generator_ids = list(cf_generator_ids)
        self.synchronized = synchronized

    @property
    def n_years(self) -> int:
        return len(self.years)

    def __getitem__(self, y):
        return self.years[y]

    def counts(self) -> list:
        return [len(s) for s in self.years]

    def probabilities(self, y) -> np.ndarray:
        return np.array([s.probability for s in self.years[y]])

    def loads(self, y) -> np.ndarray:
        """Scenario-by-region load matrix for year index ``y``."""
        return np.array([[s.load_by_region[r] for r in self.region_ids] for s in self.years[y]])

    def members(self, y, s) -> np.ndarray:
        return np.nonzero(self.chronology[y] == s)[0]

    def __repr__(self):
        return (f"ScenarioSet(years={self.n_years}, scenarios/year={self.counts()}, "
                f"blocks={self.n_load_blocks}, bins={self.n_wind_bins}, "
                f"synchronized={self.synchronized})")


def load_duration_curve(series) -> tuple:
    """Sort one year of load descending; ties keep ascending hour order.

    Returns ``(values, hours)`` where ``hours[k]`` is the source hour of
    ``values[k]``.
    """
    v = np.asarray(series, dtype=float)
    hours = np.lexsort((np.arange(len(v)), -v))
    return v[hours], hours


def _segment_dp(v: np.ndarray, k: int):
    """Split sorted ``v`` into ``k`` contiguous segments minimising total SSE.

    Returns segment start offsets. Exact dynamic programme; ties resolve to
    the earliest split point.
    """
    m = len(v)
    if k == m:
        return list(range(m))
    s1 = np.concatenate([[0.0], np.cumsum(v)])
    s2 = np.concatenate([[0.0], np.cumsum(v * v)])

    def cost(i, j):
        # SSE of v[i:j]; i may be an array
        n = j - i
        tot = s1[j] - s1[i]
        return np.maximum(s2[j] - s2[i] - tot * tot / n, 0.0)

    INF = math.inf
    D = np.full((k + 1, m + 1), INF)
    arg = np.zeros((k + 1, m + 1), dtype=int)
    D[0, 0] = 0.0
    for seg in range(1, k + 1):
        # segment `seg` ends at j, starts at i in [seg-1, j-1]
        for j in range(seg, m - (k - seg) + 1):
            i = np.arange(seg - 1, j)
            vals = D[seg - 1, i] + cost(i, j)
            t = int(np.argmin(vals))
            D[seg, j] = vals[t]
            arg[seg, j] = i[t]
    starts = []
    j = m
    for seg in range(k, 0, -1):
        i = arg[seg, j]
        starts.append(i)
        j = i
    return starts[::-1]


def _peak_hours(T: int, peak_fraction: float) -> int:
    return max(1, math.ceil(peak_fraction * T - 1e-9))


def fit_load_blocks(system_load, n_blocks: int, peak_fraction: float) -> LoadBlocks:
    """Least-squares blocking of one year's load duration curve.

    The top ``ceil(peak_fraction * T)`` hours form block 0. The rest of the
    duration curve is cut into ``n_blocks - 1`` contiguous segments chosen
    to minimise the probability-weighted squared deviation from block means.
    """
    v = np.asarray(system_load, dtype=float)
    T = len(v)
    if n_blocks < 1:
        raise ValueError("n_blocks must be >= 1")
    if n_blocks > T:
        raise ValueError(f"n_blocks {n_blocks} exceeds hours {T}")
    if not 0.0 < peak_fraction <= 1.0 / n_blocks + 1e-12:
        raise ValueError(f"peak_fraction {peak_fraction} not in (0, 1/n_blocks]")
    values, hours = load_duration_curve(v)
    block_sorted = np.zeros(T, dtype=int)
    if n_blocks > 1:
        k = _peak_hours(T, peak_fraction)
        starts = _segment_dp(values[k:], n_blocks - 1)
        for b, s in enumerate(starts, start=1):
            block_sorted[k + s:] = b
    block_of_hour = np.empty(T, dtype=int)
    block_of_hour[hours] = block_sorted
    counts = np.bincount(block_of_hour, minlength=n_blocks)
    sums = np.bincount(block_of_hour, weights=v, minlength=n_blocks)
    means = sums / counts
    sse = float(np.sum((v - means[block_of_hour]) ** 2))
    return LoadBlocks(means, counts / T, block_of_hour, sse)


def system_wind_cf(ds: SystemDataset, year: int) -> np.ndarray:
    """Target-capacity-weighted system wind capacity factor for one year."""
    weights, series = [], []
    for r in ds.regions:
        cap = float(ds.target_wind_caps.get(r.id, 0.0))
        cf = region_wind_cf(ds, r.id, year)
        if cf is None or cap <= 0:
            continue
        weights.append(cap)
        series.append(cf)
    if not weights or sum(weights) <= 0:
        raise ValueError("system wind cf needs a positive target wind capacity "
                         "in at least one region with wind")
    w = np.array(weights) / sum(weights)
    return w @ np.array(series)


def split_sub_scenarios(block_map, system_cf, n_bins: int) -> np.ndarray:
    """Split each load block into wind quantile bins.

    Within a block, hours are ordered by ascending ``(cf, hour)`` and cut
    into ``n_bins`` near-equal contiguous groups, larger groups first.
    Scenario ``block * n_bins + bin`` is then renumbered contiguously, which
    only matters when a block has fewer hours than bins.
    """
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    block_map = np.asarray(block_map, dtype=int)
    cf = np.asarray(system_cf, dtype=float)
    raw = np.empty_like(block_map)
    hours = np.arange(len(block_map))
    for b in np.unique(block_map):
        members = hours[block_map == b]
        order = members[np.lexsort((members, cf[members]))]
        for k, grp in enumerate(np.array_split(order, n_bins)):
            raw[grp] = b * n_bins + k
    _, dense = np.unique(raw, return_inverse=True)
    return dense.reshape(-1)


def _scenario_stats(ds, year, smap):
    """Per-scenario member counts, regional mean loads and generator mean cfs."""
    S = int(smap.max()) + 1
    counts = np.bincount(smap, minlength=S)
    if np.any(counts == 0):
        raise AssertionError("empty scenario in chronology map")
    loads = {r.id: np.bincount(smap, weights=r.load_series.year(year), minlength=S) / counts
             for r in ds.regions}
    cfs = {g.id: np.bincount(smap, weights=g.cf_series.year(year), minlength=S) / counts
           for g in ds.generators if g.cf_series is not None}
    return S, counts, loads, cfs


def _assemble(ds, T, S, counts, loads, cfs):
    out = []
    for s in range(S):
        lr = {rid: float(loads[rid][s]) for rid in loads}
        out.append(Scenario(
            probability=float(counts[s] / T),
            duration_hours=int(counts[s]),
            load_by_region=lr,
            cf_by_generator={gid: float(cfs[gid][s]) for gid in cfs},
            system_load=float(sum(lr.values())),
        ))
    return out


def synchronize(ds: SystemDataset, chronology) -> ScenarioSet:
    """Average every regional series over each scenario's member hours."""
    T = ds.horizon.hours_per_year
    years = []
    for y, smap in enumerate(chronology):
        smap = np.asarray(smap, dtype=int)
        if len(smap) != T:
            raise ValueError(f"chronology map of year {y} has {len(smap)} hours, expected {T}")
        S, counts, loads, cfs = _scenario_stats(ds, y, smap)
        years.append(_assemble(ds, T, S, counts, loads, cfs))
    return ScenarioSet(years, [np.asarray(m, dtype=int) for m in chronology], None, None,
                       ds.region_ids, [g.id for g in ds.generators if g.cf_series is not None])


def _nonsync_year(ds, year, smap, block_map):
    """Per-region wind halves: each region's cf is sorted on its own within a block."""
    T = ds.horizon.hours_per_year
    S, counts, loads, cfs = _scenario_stats(ds, year, smap)
    hours = np.arange(T)
    for r in ds.regions:
        winds = [g for g in ds.generators_in(r.id) if g.kind == "wind" and g.cf_series is not None]
        if not winds:
            continue
        own = region_wind_cf(ds, r.id, year)
        for b in np.unique(block_map):
            members = hours[block_map == b]
            scen_ids = np.unique(smap[members])
            # sizes of the synchronized low/high groups, in scenario order
            sizes = [int(counts[s]) for s in scen_ids]
            order = members[np.lexsort((members, own[members]))]
            groups = np.split(order, np.cumsum(sizes)[:-1])
            for s, grp in zip(scen_ids, groups):
                for g in winds:
                    cfs[g.id][s] = g.cf_series.year(year)[grp].mean()
    return _assemble(ds, T, S, counts, loads, cfs)


class ScenarioBuilder(BaseEstimator, TransformerMixin):
    """Learn per-year hour-to-scenario maps and synchronize data through them.

    Parameters
    ----------
    n_load_blocks : int
        Load blocks per year, including the preserved peak block.
    n_wind_bins : int
        Wind sub-scenarios per load block.
    peak_fraction : float
        Share of the year's hours kept together as the peak block.
    synchronized : bool
        If False, each region's wind is split into halves independently
        (requires ``n_wind_bins == 2``), discarding cross-region correlation.

    Attributes
    ----------
    chronology_ : list of ndarray
        Scenario index of every hour, one array per year.
    load_blocks_ : list of LoadBlocks
    """

    def __init__(self, n_load_blocks=20, n_wind_bins=1, peak_fraction=0.01, synchronized=True):
        self.n_load_blocks = n_load_blocks
        self.n_wind_bins = n_wind_bins
        self.peak_fraction = peak_fraction
        self.synchronized = synchronized

    def fit(self, X: SystemDataset, y=None):
        check_dataset(X)
        if not self.synchronized and self.n_wind_bins != 2:
            raise ValueError("non-synchronized scenarios are defined for n_wind_bins=2 only")
        self.load_blocks_ = []
        self.chronology_ = []
        for yr in range(X.horizon.n_years):
            blocks = fit_load_blocks(total_load(X, yr), self.n_load_blocks, self.peak_fraction)
            if self.n_wind_bins > 1:
                smap = split_sub_scenarios(blocks.block_of_hour, system_wind_cf(X, yr),
                                           self.n_wind_bins)
            else:
                smap = blocks.block_of_hour.copy()
            self.load_blocks_.append(blocks)
            self.chronology_.append(smap)
        self.n_hours_ = X.horizon.hours_per_year
        return self

    def transform(self, X: SystemDataset) -> ScenarioSet:
        check_is_fitted(self, "chronology_")
        if X.horizon.hours_per_year != self.n_hours_ or X.horizon.n_years != len(self.chronology_):
            raise ValueError("dataset horizon differs from the one used in fit")
        if self.synchronized:
            out = synchronize(X, self.chronology_)
        else:
            years = [
                _nonsync_year(X, yr, self.chronology_[yr], self.load_blocks_[yr].block_of_hour)
                for yr in range(len(self.chronology_))
            ]
            out = ScenarioSet(years, [m.copy() for m in self.chronology_], None, None,
                              X.region_ids,
                              [g.id for g in X.generators if g.cf_series is not None],
                              synchronized=False)
        out.n_load_blocks = self.n_load_blocks
        out.n_wind_bins = self.n_wind_bins
        return out


def build_scenarios(ds, n_load_blocks, n_wind_bins, peak_fraction=0.01) -> ScenarioSet:
    return ScenarioBuilder(n_load_blocks, n_wind_bins, peak_fraction).fit_transform(ds)


def build_nonsync_scenarios(ds, n_load_blocks, peak_fraction=0.01) -> ScenarioSet:
    return ScenarioBuilder(n_load_blocks, 2, peak_fraction, synchronized=False).fit_transform(ds)


def per_hour_scenarios(ds: SystemDataset) -> ScenarioSet:
    """One scenario per hour: the finest possible chronology map."""
    T = ds.horizon.hours_per_year
    return build_scenarios(ds, T, 1, 1.0 / T)
