import dataclasses

import numpy as np
import pytest

from coexpand.core import ChronoSeries, GeneratorType, PlanningHorizon, Region, SystemDataset
from coexpand.model import (DISPATCH, FLOW_NEG, FLOW_POS, GEN_BUILD, UNSERVED, build_model,
                            cost_breakdown, derate, discount_factor, discount_factors,
                            maintenance_factors)
from coexpand.scenarios import ScenarioBuilder, build_scenarios
from coexpand.solver import solve_mip
from coexpand.synthetic import toy_system


# -- discounting -----------------------------------------------------------

def test_discount_examples():
    assert discount_factor(0.0, 1, 5) == 1.0
    assert discount_factor(0.05, 1, 5) == pytest.approx(0.9523810, abs=1e-6)
    assert discount_factor(0.05, 2, 2) == pytest.approx(19.0476190, abs=1e-6)
    with pytest.raises(ValueError):
        discount_factor(0.0, 3, 3)
    with pytest.raises(ValueError):
        discount_factor(0.05, 0, 3)


@pytest.mark.parametrize("d", [0.01, 0.05, 0.1])
def test_end_year_is_perpetuity(d):
    # the tail factor must equal the sum of all remaining years
    n = 4
    tail = sum((1 + d) ** -k for k in range(n, 20000))
    assert discount_factor(d, n, n) == pytest.approx(tail, rel=1e-9)
    assert np.all(np.diff(discount_factors(d, 10)[:-1]) < 0)


# -- derating --------------------------------------------------------------

def _unit(forced, maint):
    return GeneratorType("g", "A", "thermal", False, 1.0, 1, (0.0,), 0, 0, (0.0,), 0, 0, (0.0,),
                         forced, maint, 0, (0,))


def test_derate_examples():
    assert derate(_unit(0, 0), 0.5) == 1.0
    assert derate(_unit(0.05, 0.2), 0.5) == pytest.approx(0.85)
    assert derate(_unit(0.6, 0.8), 1.0) == 0.0
    assert derate(_unit(0.05, 0.2), 0.5, printed_sign=True) == pytest.approx(0.95)
    with pytest.raises(ValueError):
        derate(_unit(0, 0), 1.5)


def test_maintenance_factor_examples():
    np.testing.assert_allclose(maintenance_factors([10, 0, 5]), [0, 1, 0.5])
    np.testing.assert_array_equal(maintenance_factors([3, 3]), [0, 0])


# -- structure -------------------------------------------------------------

def _one_bus(load=50.0, T=2):
    r = Region("A", 1000.0, (0.0,), (0.0,), ChronoSeries([load] * T, 1, T))
    g = GeneratorType("g", "A", "thermal", False, 100.0, 1, (0.0,), 0, 10.0, (0.0,), 0, 0, (0.0,),
                      0, 0, 0, (0,))
    return SystemDataset(PlanningHorizon(1, T, 0.05), (r,), (g,), ())


def test_minimal_balance_row():
    ds = _one_bus()
    b = build_model(ds, build_scenarios(ds, 1, 1, 0.5))
    m = b.model
    row = next(c for c in m.constraints if c.family == "balance")
    assert row.sense == "=" and row.rhs == 50.0
    assert sorted(m.catalog.names[j] for j in row.cols) == ["p_y1_s0_g", "use_y1_s0_A"]
    sol = solve_mip(m)
    assert sol.objective == pytest.approx(10.0 * 50 * 2 * discount_factor(0.05, 1, 1))


def test_interface_sign_in_balance():
    ds = toy_system()
    b = build_model(ds, build_scenarios(ds, 2, 1, 1 / 24))
    m = b.model
    rows = {c.name: dict(zip(c.cols, c.vals)) for c in m.constraints}
    ip, i_n = b.index(FLOW_POS, 1, 0, "BA"), b.index(FLOW_NEG, 1, 0, "BA")
    # forward flow B->A leaves B and arrives in A
    assert rows["bal_y1_s0_B"][ip] == -1.0 and rows["bal_y1_s0_B"][i_n] == 1.0
    assert rows["bal_y1_s0_A"][ip] == 1.0 and rows["bal_y1_s0_A"][i_n] == -1.0


def _two_by_two():
    base = toy_system()
    coal = base.generators[0]
    extra = dataclasses.replace(coal, id="ctA", unit_capacity=20.0)
    gens = (coal, extra) + base.generators[1:]
    return base.replace(generators=gens)


def test_variable_count_for_two_of_everything():
    ds = _two_by_two()
    scn = ScenarioBuilder(2, 1, 1 / 24).fit_transform(ds)
    m = build_model(ds, scn).model
    # builds 4*2 + 1*2, dispatch 4*2*2, unserved 2*2*2, flows 2*1*2*2
    assert m.n_vars == 8 + 2 + 16 + 8 + 8 == 42
    fam = m.summary()
    assert isinstance(fam, dict)


def test_build_bounds_follow_annual_and_total_limits():
    ds = toy_system(wind_bounds=(0, 3))
    b = build_model(ds, build_scenarios(ds, 2, 1, 1 / 24))
    j = b.index(GEN_BUILD, 1, "windB")
    assert b.model.lb[j] == 0 and b.model.ub[j] == 2
    assert b.model.integrality[j]


# -- accounting ------------------------------------------------------------

@pytest.fixture(scope="module")
def toy_solved():
    ds = toy_system()
    b = build_model(ds, build_scenarios(ds, 3, 2, 2 / 24))
    return b, solve_mip(b.model, gap_tol=1e-9)


def test_cost_terms_sum_to_objective(toy_solved):
    b, sol = toy_solved
    terms = cost_breakdown(b, sol.values)
    assert terms["total"] == pytest.approx(sol.objective, rel=1e-9)
    assert all(v >= -1e-9 for v in terms.values())


def test_solution_is_feasible_and_integral(toy_solved):
    b, sol = toy_solved
    assert sol.status == "optimal"
    assert b.model.max_violation(sol.values) <= 1e-6
    ints = b.model.integrality
    np.testing.assert_allclose(sol.values[ints], np.round(sol.values[ints]), atol=1e-6)


def test_price_scaling_scales_objective():
    ds = toy_system()
    scn = build_scenarios(ds, 2, 1, 1 / 24)
    k = 3.0
    scaled = ds.replace(
        regions=tuple(dataclasses.replace(r, voll=k * r.voll) for r in ds.regions),
        generators=tuple(dataclasses.replace(
            g, build_cost_by_year=tuple(k * v for v in g.build_cost_by_year),
            fixed_om=k * g.fixed_om, variable_om=k * g.variable_om,
            fuel_price_by_year=tuple(k * v for v in g.fuel_price_by_year),
            emission_price_by_year=tuple(k * v for v in g.emission_price_by_year))
            for g in ds.generators),
        interfaces=tuple(dataclasses.replace(
            l, build_cost_by_year=tuple(k * v for v in l.build_cost_by_year),
            wheeling_cost=k * l.wheeling_cost) for l in ds.interfaces))
    a = solve_mip(build_model(ds, scn).model, gap_tol=1e-9)
    b = solve_mip(build_model(scaled, scn).model, gap_tol=1e-9)
    assert b.objective == pytest.approx(k * a.objective, rel=1e-7)


def test_more_load_never_costs_less():
    ds = toy_system()
    heavier = ds.replace(regions=tuple(
        dataclasses.replace(r, load_series=ChronoSeries(r.load_series.values * 1.1, 2, 24))
        for r in ds.regions))
    objs = []
    for d in (ds, heavier):
        objs.append(solve_mip(build_model(d, build_scenarios(d, 2, 1, 1 / 24)).model,
                              gap_tol=1e-9).objective)
    assert objs[1] >= objs[0] - 1e-6


def test_shedding_when_energy_dearer_than_voll():
    ds = _one_bus(load=80.0, T=1)
    g = dataclasses.replace(ds.generators[0], variable_om=2000.0)
    ds = ds.replace(generators=(g,))
    b = build_model(ds, build_scenarios(ds, 1, 1, 1.0))
    sol = solve_mip(b.model)
    assert sol.values[b.index(UNSERVED, 1, 0, "A")] == pytest.approx(80.0)
    assert sol.values[b.index(DISPATCH, 1, 0, "g")] == pytest.approx(0.0)
    assert sol.objective == pytest.approx(1000.0 * 80 * discount_factor(0.05, 1, 1))


def test_reserve_shortfall_is_reported():
    ds = _one_bus(load=50.0, T=1)
    ds = ds.replace(regions=(dataclasses.replace(ds.regions[0], reserve_margin_by_year=(500.0,)),))
    b = build_model(ds, build_scenarios(ds, 1, 1, 1.0))
    assert b.warnings and "res_y1_s0_A" in b.warnings[0]
    assert solve_mip(b.model).status == "infeasible"


def test_printed_sign_inflates_capacity():
    ds = toy_system()
    scn = build_scenarios(ds, 2, 1, 1 / 24)
    a = build_model(ds, scn).model
    b = build_model(ds, scn, printed_outage_sign=True).model
    ra = {c.name: c.rhs for c in a.constraints if c.family == "dispatch_cap"}
    rb = {c.name: c.rhs for c in b.constraints if c.family == "dispatch_cap"}
    assert all(rb[k] > ra[k] for k in ra if ra[k] > 0)


def test_mismatched_years_rejected():
    ds = toy_system()
    scn = build_scenarios(toy_system(n_years=1), 2, 1, 1 / 24)
    with pytest.raises(ValueError, match="years"):
        build_model(ds, scn)
