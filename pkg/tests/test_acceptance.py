"""Acceptance suite: one PASS/FAIL line per criterion, printed at the end of the run."""
import dataclasses
import math
import time

import numpy as np
import pytest
from scipy.optimize import linprog

from acceptance_log import record
from coexpand.cases import not_cooptimized_pipeline, run_case, standard_cases
from coexpand.cli import bundled_dataset
from coexpand.dispatch import gap_value, lt_operate, st_operate
from coexpand.io import read_dataset
from coexpand.model import build_model, discount_factor
from coexpand.planner import ExpansionPlanner
from coexpand.scenarios import ScenarioBuilder, build_scenarios, per_hour_scenarios
from coexpand.solver import export_mps, read_mps, simplex, solve_mip
from coexpand.synthetic import toy_system
from oracles import enumerate_builds, enumerate_lp, random_lp


@pytest.fixture(scope="module")
def desk():
    ds, _ = read_dataset(bundled_dataset())
    return ds


@pytest.fixture(scope="module")
def cases():
    return {c.name: c for c in standard_cases(gap=1e-9, engine="highs")}


@pytest.fixture(scope="module")
def desk_runs(desk, cases):
    names = ("20x1", "20x2-sync", "20x2-nonsync", "20x4")
    return {n: run_case(desk, cases[n]) for n in names}


def _wind_mw(ds, plan):
    return sum(v * g.unit_capacity for g in ds.generators if g.uses_cf
               for (y, gid), v in plan.gen_builds.items() if gid == g.id)


def _lp_highs(c, A, lo, hi, lb, ub):
    eq = np.isfinite(lo) & np.isfinite(hi)
    le = np.isfinite(hi) & ~eq
    ge = np.isfinite(lo) & ~eq
    A_ub = np.vstack([A[le].toarray(), -A[ge].toarray()])
    b_ub = np.concatenate([hi[le], -lo[ge]])
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A[eq].toarray(), b_eq=hi[eq],
                  bounds=list(zip(lb, ub)), method="highs")
    return res.status == 0, (res.fun if res.status == 0 else math.inf)


def _toys():
    """Five small systems within the enumeration limits."""
    specs = [
        dict(seed=0),
        dict(seed=1, wind_bounds=(1, 3)),
        dict(seed=2, with_interface=False),
        dict(seed=3, n_years=1),
        dict(seed=4, wind_bounds=(0, 2)),
    ]
    out = []
    for kw in specs:
        ds = toy_system(**kw)
        scn = build_scenarios(ds, 2, 2, 2 / 24)
        out.append(build_model(ds, scn))
    return out


@pytest.fixture(scope="module")
def toy_models():
    return _toys()


def test_criterion_1_mip_matches_enumeration(toy_models):
    start = time.perf_counter()
    worst, combos, ok = 0.0, 0, True
    for built in toy_models:
        m = built.model
        assert len(built.scenarios[0]) <= 4 and m.ub[m.integrality].max() <= 3
        best, n = enumerate_builds(built, _lp_highs)
        sol = solve_mip(m, gap_tol=1e-9, engine="builtin")
        rel = abs(sol.objective - best) / max(abs(best), 1e-12)
        worst, combos = max(worst, rel), combos + n
        ok &= sol.status == "optimal" and rel <= 1e-6
    elapsed = time.perf_counter() - start
    ok &= elapsed < 60
    record(1, ok, f"{len(toy_models)} toys, {combos} build vectors, max rel err {worst:.2e}, "
                  f"{elapsed:.1f}s")
    assert ok


def test_criterion_2_lp_matches_vertex_oracle():
    start = time.perf_counter()
    worst, bad, n_opt = 0.0, [], 0
    for seed in range(100):
        c, A, senses, b = random_lp(np.random.default_rng(seed))
        status, obj = enumerate_lp(c, A, senses, b)
        sol = simplex(c, A, senses, b)
        if sol.status != status:
            bad.append(seed)
        elif status == "optimal":
            n_opt += 1
            err = abs(sol.objective - obj)
            worst = max(worst, err)
            if err > 1e-7 * max(1.0, abs(obj)):
                bad.append(seed)
    elapsed = time.perf_counter() - start
    ok = not bad and elapsed < 30
    record(2, ok, f"100 LPs ({n_opt} optimal), max abs err {worst:.1e}, mismatches {bad}, "
                  f"{elapsed:.1f}s")
    assert ok


def test_criterion_3_discounting():
    worst = 0.0
    for d in (0.01, 0.05, 0.1):
        for n in (2, 15):
            for y in range(1, n):
                worst = max(worst, abs(discount_factor(d, y, n) - 1 / (1 + d) ** y))
            series = (1 + d) ** -n + (1 + d) ** -(n + 1) / (1 - 1 / (1 + d))
            closed = (1 + d) ** -n * (1 + 1 / d)
            worst = max(worst, abs(discount_factor(d, n, n) - series) / series,
                        abs(series - closed) / closed)
    ok = worst <= 1e-9
    record(3, ok, f"d in (0.01, 0.05, 0.1), N in (2, 15), max err {worst:.1e}")
    assert ok


def _invariant_errors(ds, scn):
    errs = []
    for y in range(ds.horizon.n_years):
        sc = scn[y]
        smap = scn.chronology[y]
        if abs(sum(s.probability for s in sc) - 1) > 1e-9:
            errs.append(f"y{y + 1}: probabilities")
        counts = np.bincount(smap, minlength=len(sc))
        if len(smap) != ds.horizon.hours_per_year or any(
                counts[k] != s.duration_hours for k, s in enumerate(sc)) or counts.min() == 0:
            errs.append(f"y{y + 1}: partition")
        for r in ds.regions:
            mean = r.load_series.year(y).mean()
            exp = math.fsum(s.probability * s.load_by_region[r.id] for s in sc)
            if abs(exp - mean) > 1e-9 * abs(mean):
                errs.append(f"y{y + 1}: mean load {r.id}")
        system = sum(r.load_series.year(y) for r in ds.regions)
        peak_s = smap[int(np.argmax(system))]
        if sc[peak_s].system_load < max(s.system_load for s in sc):
            errs.append(f"y{y + 1}: peak")
    return errs


def test_criterion_4_scenario_invariants(desk, cases):
    T = desk.horizon.hours_per_year
    errs, counts = [], {}
    for name, case in cases.items():
        scn = case.builder(T).fit_transform(desk)
        counts[name] = len(scn[0])
        errs += [f"{name} {e}" for e in _invariant_errors(desk, scn)]
    ok = not errs
    record(4, ok, f"scenarios/year {counts}; violations {errs[:3]}")
    assert ok


def test_criterion_5_wind_ordering(desk_runs):
    mw = {n: _wind_mw(r["dataset"], r["planner"].plan_) for n, r in desk_runs.items()}
    avg, sync, nonsync = mw["20x1"], mw["20x2-sync"], mw["20x2-nonsync"]
    ok = avg > sync >= nonsync
    record(5, ok, f"wind built MW: avg {avg:g} > sync {sync:g} >= nonsync {nonsync:g}")
    assert ok


def test_criterion_6_gap_trend(desk_runs):
    def gap(r):
        lt, st = r["lt"], r["st"]
        return gap_value(lt.generation_cost, lt.emission_cost, st.generation_cost,
                         st.emission_cost)

    g1, g4 = gap(desk_runs["20x1"]), gap(desk_runs["20x4"])
    row_a = gap_value(47.9, 42.8, 60.3, 50.9)
    row_b = gap_value(55.2, 51.3, 59.5, 53.2)
    ok = g4 < g1 and abs(row_a - 0.184) <= 0.003 and abs(row_b - 0.055) <= 0.002
    record(6, ok, f"gap 20x4 {g4:.2%} < 20x1 {g1:.2%}; printed rows {row_a:.2%}, {row_b:.2%}")
    assert ok


def test_criterion_7_cooptimization_dominates(desk, cases):
    rep = not_cooptimized_pipeline(desk, cases["20x1"])["report"]
    strict = rep["sequential_npv"] > rep["cooptimized_npv"] * (1 + 1e-9)

    no_tx = desk.replace(interfaces=tuple(
        dataclasses.replace(l, max_total_builds=0, max_annual_builds=(0,) * desk.horizon.n_years)
        for l in desk.interfaces))
    rep0 = not_cooptimized_pipeline(no_tx, cases["20x1"])["report"]
    equal = abs(rep0["delta_npv"]) <= 1e-9 * abs(rep0["cooptimized_npv"])
    ok = strict and equal
    record(7, ok, f"sequential - co-optimized = {rep['delta_npv']:.4g} "
                  f"({rep['delta_pct']:.3f}%); without interface candidates {rep0['delta_npv']:.2g}")
    assert ok


def test_criterion_8_per_hour_lt_equals_st():
    ds = toy_system(hours=48)
    scn = ScenarioBuilder(4, 2, 2 / 48).fit_transform(ds)
    plan = ExpansionPlanner(gap=1e-9).fit(ds, scn).plan_
    lt = lt_operate(ds, per_hour_scenarios(ds), plan)
    st = st_operate(ds, plan)
    rel = abs(lt.total - st.total) / abs(st.total)
    ok = rel <= 1e-6
    record(8, ok, f"48-hour toy, LT {lt.total:.6f} vs ST {st.total:.6f}, rel {rel:.1e}")
    assert ok


def _identical(a, b):
    return (a.catalog.names == b.catalog.names
            and np.array_equal(a.objective, b.objective)
            and np.array_equal(a.lb, b.lb) and np.array_equal(a.ub, b.ub)
            and np.array_equal(a.integrality, b.integrality)
            and a.senses == b.senses and np.array_equal(a.rhs, b.rhs)
            and (a.matrix() != b.matrix()).nnz == 0 and a.constant == b.constant)


def test_criterion_9_mps_round_trip(toy_models, desk_runs):
    models = [b.model for b in toy_models]
    models += [desk_runs[n]["planner"].built_.model
               for n in ("20x1", "20x2-sync", "20x2-nonsync")]
    fresh = [b.model for b in _toys()]
    bad = []
    for k, m in enumerate(models):
        text = export_mps(m)
        back = read_mps(text)
        if not _identical(m, back) or export_mps(back) != text:
            bad.append(k)
    for k, (m, f) in enumerate(zip(models, fresh)):
        if export_mps(m) != export_mps(f):
            bad.append(f"rebuild {k}")
    ok = not bad
    record(9, ok, f"{len(models)} models round-tripped, failures {bad}")
    assert ok
