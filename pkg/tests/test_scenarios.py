import numpy as np
import pytest

from coexpand.core import ChronoSeries, GeneratorType, PlanningHorizon, Region, SystemDataset
from coexpand.scenarios import (ScenarioBuilder, build_nonsync_scenarios, build_scenarios,
                                fit_load_blocks, load_duration_curve, per_hour_scenarios,
                                split_sub_scenarios, synchronize, system_wind_cf)
from coexpand.synthetic import desk_ei, toy_system
from oracles import best_contiguous_blocks


def _wind(gid, region, cf, n_years, T, cap=10.0):
    return GeneratorType(gid, region, "wind", True, cap, 1, (0.0,) * n_years, 0, 0,
                         (0.0,) * n_years, 0, 0, (0.0,) * n_years, 0, 0, 0, (0,) * n_years,
                         ChronoSeries(cf, n_years, T))


def _dataset(loads: dict, cfs: dict, targets=None):
    T = len(next(iter(loads.values())))
    regions = tuple(Region(r, 1000.0, (0.0,), (0.0,), ChronoSeries(v, 1, T))
                    for r, v in loads.items())
    gens = tuple(_wind(f"w{r}", r, cf, 1, T) for r, cf in cfs.items())
    return SystemDataset(PlanningHorizon(1, T, 0.05), regions, gens, (),
                         target_wind_caps=targets or {r: 1.0 for r in cfs})


# -- load duration curve ---------------------------------------------------

def test_ldc_sorts_and_tags_hours():
    v, h = load_duration_curve([3, 1, 2])
    assert v.tolist() == [3, 2, 1] and h.tolist() == [0, 2, 1]


def test_ldc_tie_rule_keeps_hour_order():
    v, h = load_duration_curve([5, 5, 5, 5])
    assert v.tolist() == [5] * 4 and h.tolist() == [0, 1, 2, 3]


def test_ldc_is_permutation():
    x = np.random.default_rng(3).normal(size=50)
    v, h = load_duration_curve(x)
    assert sorted(v.tolist()) == sorted(x.tolist())
    assert np.all(np.diff(v) <= 0)
    np.testing.assert_array_equal(x[h], v)


# -- load blocks -----------------------------------------------------------

def test_two_cluster_blocks():
    b = fit_load_blocks([1, 1, 3, 3], 2, 0.5)
    assert b.values.tolist() == [3.0, 1.0]
    assert b.probabilities.tolist() == [0.5, 0.5]


def test_peak_block_against_brute_force():
    b = fit_load_blocks([1, 2, 3, 100], 2, 0.25)
    assert b.values.tolist() == [100.0, 2.0]
    assert b.probabilities.tolist() == [0.25, 0.75]
    sse, bounds = best_contiguous_blocks([3, 2, 1], 1)
    assert bounds == (0, 3) and sse == pytest.approx(2.0)


def test_constant_load_blocks():
    b = fit_load_blocks([7.0] * 12, 4, 0.1)
    np.testing.assert_array_equal(b.values, [7.0] * 4)
    assert b.sse == 0.0


@pytest.mark.parametrize("seed", range(6))
def test_dp_matches_exhaustive_partition(seed):
    rng = np.random.default_rng(seed)
    v = rng.integers(0, 50, size=11).astype(float)
    b = fit_load_blocks(v, 4, 1 / 11)
    sorted_v, _ = load_duration_curve(v)
    best, _ = best_contiguous_blocks(sorted_v[1:], 3)
    peak_sse = 0.0
    assert b.sse == pytest.approx(best + peak_sse, abs=1e-9)


def test_block_errors():
    with pytest.raises(ValueError):
        fit_load_blocks([1, 2], 3, 0.1)
    with pytest.raises(ValueError):
        fit_load_blocks([1, 2, 3, 4], 2, 0.75)


# -- system wind cf --------------------------------------------------------

def test_system_cf_weighted():
    ds = _dataset({"A": [1.0], "B": [1.0]}, {"A": [0.5], "B": [0.3]}, {"A": 100.0, "B": 300.0})
    assert system_wind_cf(ds, 0)[0] == pytest.approx(0.35)


def test_system_cf_single_region_and_symmetry():
    ds = _dataset({"A": [1.0, 1.0]}, {"A": [0.1, 0.7]})
    np.testing.assert_allclose(system_wind_cf(ds, 0), [0.1, 0.7])
    ds = _dataset({"A": [1.0], "B": [1.0]}, {"A": [0.2], "B": [0.4]})
    assert system_wind_cf(ds, 0)[0] == pytest.approx(0.3)


def test_system_cf_requires_target():
    ds = _dataset({"A": [1.0]}, {"A": [0.2]}, {"A": 0.0})
    with pytest.raises(ValueError, match="target"):
        system_wind_cf(ds, 0)


# -- sub-scenarios ---------------------------------------------------------

def test_quantile_split_and_ties():
    assert split_sub_scenarios([0] * 4, [.1, .2, .3, .4], 2).tolist() == [0, 0, 1, 1]
    assert split_sub_scenarios([0] * 4, [.3] * 4, 2).tolist() == [0, 0, 1, 1]
    assert split_sub_scenarios([0, 1, 1, 0], [.9, .1, .2, .3], 1).tolist() == [0, 1, 1, 0]


def test_uneven_and_tiny_blocks():
    m = split_sub_scenarios([0, 0, 0, 1], [.3, .1, .2, .5], 2)
    assert m.tolist() == [1, 0, 0, 2]


def test_synchronize_means_and_probability():
    ds = _dataset({"A": [1, 2, 3, 4, 5, 6, 7, 8], "B": [10, 14, 0, 0, 0, 0, 0, 0]},
                  {"A": [.1] * 8})
    scn = synchronize(ds, [np.array([0, 0, 1, 1, 1, 1, 2, 2])])
    assert scn[0][0].load_by_region["B"] == 12.0
    assert scn[0][1].probability == 0.5 and scn[0][1].duration_hours == 4


def test_eight_hour_toy_gives_four_scenarios():
    ds = _dataset({"A": [1, 2, 3, 4, 5, 6, 7, 8]}, {"A": [.8, .1, .7, .2, .6, .3, .5, .4]})
    scn = build_scenarios(ds, 2, 2, 0.25)
    assert [s.duration_hours for s in scn[0]] == [1, 1, 3, 3]
    scn = build_scenarios(ds, 2, 2, 0.5)
    assert [s.duration_hours for s in scn[0]] == [2, 2, 2, 2]
    assert sorted(scn.members(0, 0).tolist() + scn.members(0, 1).tolist()) == [4, 5, 6, 7]


# -- non-synchronized ------------------------------------------------------

def test_nonsync_breaks_anticorrelation():
    ds = _dataset({"A": [5, 5, 5, 5], "B": [5, 5, 5, 5]},
                  {"A": [.1, .2, .8, .9], "B": [.9, .8, .2, .1]})
    sync = build_scenarios(ds, 1, 2, 1.0)
    non = build_nonsync_scenarios(ds, 1, 1.0)
    lo, hi = non[0]
    assert hi.cf_by_generator == {"wA": pytest.approx(.85), "wB": pytest.approx(.85)}
    assert lo.cf_by_generator == {"wA": pytest.approx(.15), "wB": pytest.approx(.15)}
    assert sync[0][0].cf_by_generator["wA"] + sync[0][0].cf_by_generator["wB"] == pytest.approx(1.0)


def test_nonsync_single_region_equals_sync():
    ds = _dataset({"A": list(range(16))}, {"A": list(np.linspace(0, 1, 16)[::-1])})
    a = build_scenarios(ds, 3, 2, 2 / 16)
    b = build_nonsync_scenarios(ds, 3, 2 / 16)
    assert a[0] == b[0]


def test_nonsync_constant_cf_equals_sync():
    ds = _dataset({"A": list(range(16)), "B": list(range(16, 0, -1))},
                  {"A": [.4] * 16, "B": [.4] * 16})
    assert build_scenarios(ds, 2, 2, 0.125)[0] == build_nonsync_scenarios(ds, 2, 0.125)[0]


def test_nonsync_needs_two_bins():
    with pytest.raises(ValueError):
        ScenarioBuilder(4, 3, 0.01, synchronized=False).fit(toy_system())


# -- invariants on desk-EI ---------------------------------------------------

@pytest.fixture(scope="module")
def desk():
    return desk_ei()


def check_invariants(ds, scn):
    T = ds.horizon.hours_per_year
    for y in range(ds.horizon.n_years):
        smap = scn.chronology[y]
        S = len(scn[y])
        assert sorted(np.unique(smap).tolist()) == list(range(S))
        assert sum(s.duration_hours for s in scn[y]) == T
        assert abs(sum(s.probability for s in scn[y]) - 1.0) <= 1e-9
        for r in ds.regions:
            exp = sum(s.probability * s.load_by_region[r.id] for s in scn[y])
            assert exp == pytest.approx(r.load_series.year(y).mean(), rel=1e-9)
        for g in ds.generators:
            if g.cf_series is not None:
                exp = sum(s.probability * s.cf_by_generator[g.id] for s in scn[y])
                assert exp == pytest.approx(g.cf_series.year(y).mean(), rel=1e-9)
        peak = int(np.argmax(sum(r.load_series.year(y) for r in ds.regions)))
        loads = [s.system_load for s in scn[y]]
        assert loads[smap[peak]] == max(loads)


@pytest.mark.parametrize("bins,sync", [(1, True), (2, True), (2, False), (4, True), (8, True)])
def test_desk_invariants(desk, bins, sync):
    T = desk.horizon.hours_per_year
    scn = ScenarioBuilder(20, bins, bins / T, sync).fit_transform(desk)
    assert scn.counts() == [20 * bins] * 5
    check_invariants(desk, scn)


def test_monotone_refinement_for_equal_blocks():
    T = 64
    rng = np.random.default_rng(4)
    ds = _dataset({"A": np.repeat([4.0, 3.0, 2.0, 1.0], 16)}, {"A": rng.uniform(size=T)})
    two = build_scenarios(ds, 4, 2, 0.25).chronology[0]
    four = build_scenarios(ds, 4, 4, 0.25).chronology[0]
    for s in np.unique(four):
        parents = np.unique(two[four == s])
        assert len(parents) == 1


def test_determinism(desk):
    a = ScenarioBuilder(20, 4, 4 / 1008).fit_transform(desk)
    b = ScenarioBuilder(20, 4, 4 / 1008).fit_transform(desk)
    assert a[3] == b[3]
    assert all(np.array_equal(x, y) for x, y in zip(a.chronology, b.chronology))


def test_per_hour_scenarios_are_the_hours():
    ds = toy_system(hours=48)
    scn = per_hour_scenarios(ds)
    assert scn.counts() == [48, 48]
    for y in range(2):
        for h in range(48):
            s = scn[y][scn.chronology[y][h]]
            assert s.load_by_region["A"] == ds.region("A").load_series.year(y)[h]


def test_builder_is_a_transformer():
    ds = toy_system()
    b = ScenarioBuilder(n_load_blocks=4, n_wind_bins=2, peak_fraction=2 / 24)
    assert b.get_params()["n_wind_bins"] == 2
    scn = b.fit(ds).transform(ds)
    assert len(b.chronology_) == 2 and scn.n_load_blocks == 4
    with pytest.raises(ValueError, match="horizon"):
        b.transform(toy_system(hours=48))
