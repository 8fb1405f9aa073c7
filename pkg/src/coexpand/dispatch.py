"""Fixed-plan operation: scenario-weighted (LT) versus chronological (ST) dispatch."""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp

from .core import SystemDataset, interface_incidence
from .model import _capacity_weight, discount_factors, maintenance_factors
from .planner import ExpansionPlan
from .scenarios import ScenarioSet
from .solver.simplex import simplex


@dataclass
class YearCosts:
    year: int
    generation_cost: float
    emission_cost: float
    fuel_cost: float
    vom_cost: float
    lost_load_cost: float
    wheeling_cost: float
    reserve_penalty: float
    unserved_mwh: float
    emissions_ton: float
    generation_mwh: dict = field(default_factory=dict)
    interface_mwh: dict = field(default_factory=dict)
    discount: float = 1.0


@dataclass
class CostBreakdown:
    """NPV operating cost of a plan, split into generation and emission cost."""

    mode: str
    generation_cost: float
    emission_cost: float
    years: list

    @property
    def total(self) -> float:
        return self.generation_cost + self.emission_cost


@dataclass
class GapReport:
    lt_generation_cost: float
    lt_emission_cost: float
    st_generation_cost: float
    st_emission_cost: float
    gap: float
    by_year: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def by_year_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["year", "lt_generation_cost", "lt_emission_cost", "st_generation_cost",
                    "st_emission_cost", "gap"])
        for row in self.by_year:
            w.writerow([row["year"]] + [repr(float(row[k])) for k in (
                "lt_generation_cost", "lt_emission_cost", "st_generation_cost",
                "st_emission_cost", "gap")])
        return buf.getvalue()


class _YearDispatch:
    """Period LP template for one year with the plan's installed capacity."""

    def __init__(self, ds: SystemDataset, plan: ExpansionPlan, year: int, printed_sign=False):
        self.ds = ds
        self.year = year
        self.printed_sign = printed_sign
        self.gens = list(ds.generators)
        self.regions = list(ds.regions)
        self.ifaces = list(ds.interfaces)
        G, R, L = len(self.gens), len(self.regions), len(self.ifaces)
        self.G, self.R, self.L = G, R, L
        self.n = G + 2 * R + 2 * L
        units = plan.gen_units(ds, year)
        tx_units = plan.tx_units(ds, year)
        self.units = np.array([units[g.id] for g in self.gens], dtype=float)
        self.flow_cap = np.array([l.unit_capacity * tx_units[l.id] for l in self.ifaces])

        y0 = year - 1
        self.energy_cost = np.array([g.heat_rate * g.fuel_price_by_year[y0] + g.variable_om
                                     for g in self.gens])
        self.fuel = np.array([g.heat_rate * g.fuel_price_by_year[y0] for g in self.gens])
        self.vom = np.array([g.variable_om for g in self.gens])
        self.emis_cost = np.array([g.emission_price_by_year[y0] * g.emission_rate
                                   for g in self.gens])
        self.emis_rate = np.array([g.emission_rate for g in self.gens])
        self.voll = np.array([r.voll for r in self.regions])
        self.wheel = np.array([l.wheeling_cost for l in self.ifaces])
        self.reserve = np.array([r.reserve_margin_by_year[y0] for r in self.regions])
        c = np.concatenate([self.energy_cost + self.emis_cost, self.voll, self.wheel,
                            self.wheel, self.voll])
        self.c = c

        rid = {r.id: k for k, r in enumerate(self.regions)}
        lid = {l.id: k for k, l in enumerate(self.ifaces)}
        A = np.zeros((2 * R + L, self.n))
        p = ds.reserve_import_credit
        for gk, g in enumerate(self.gens):
            A[rid[g.region], gk] = 1.0
        for r in self.regions:
            k = rid[r.id]
            A[k, G + k] = 1.0
            A[R + k, G + R + 2 * L + k] = 1.0
            for l_id, sign in interface_incidence(ds, r.id):
                j = lid[l_id]
                A[k, G + R + j] = sign
                A[k, G + R + L + j] = -sign
                A[R + k, G + R + j] = p * sign
                A[R + k, G + R + L + j] = -p * sign
        for j in range(L):
            A[2 * R + j, G + R + j] = 1.0
            A[2 * R + j, G + R + L + j] = 1.0
        self.A = A
        self.senses = ["="] * R + [">="] * R + ["<="] * L
        self.cf_index = [k for k, g in enumerate(self.gens) if g.uses_cf]

    def period_data(self, loads, cfs, mf):
        """rhs and upper bounds for each period.

        ``loads``: (P, R); ``cfs``: (P, G) with 1 for non-variable units;
        ``mf``: (P, R) maintenance factors.
        """
        Pn = loads.shape[0]
        rk = {r.id: k for k, r in enumerate(self.regions)}
        gen_r = np.array([rk[g.region] for g in self.gens], dtype=int)
        avail = np.empty((Pn, self.G))
        for gk, g in enumerate(self.gens):
            for t in range(Pn):
                avail[t, gk] = _capacity_weight(g, mf[t, gen_r[gk]], cfs[t, gk], self.printed_sign)
        cap = avail * (self.units * np.array([g.unit_capacity for g in self.gens]))[None, :]
        firm = np.zeros((Pn, self.R))
        np.add.at(firm.T, gen_r, cap.T)
        b = np.hstack([loads, loads + self.reserve[None, :] - firm,
                       np.broadcast_to(self.flow_cap, (Pn, self.L))])
        ub = np.hstack([cap, np.full((Pn, self.R), np.inf),
                        np.broadcast_to(self.flow_cap, (Pn, self.L)),
                        np.broadcast_to(self.flow_cap, (Pn, self.L)),
                        np.full((Pn, self.R), np.inf)])
        return b, ub

    def solve(self, loads, cfs, mf, backend):
        b, ub = self.period_data(loads, cfs, mf)
        Pn = loads.shape[0]
        if backend == "highs":
            return self._solve_batch(b, ub)
        if backend != "builtin":
            raise ValueError(f"unknown dispatch backend {backend!r}")
        X = np.empty((Pn, self.n))
        lb = np.zeros(self.n)
        for t in range(Pn):
            sol = simplex(self.c, self.A, self.senses, b[t], lb, ub[t])
            if sol.status != "optimal":
                raise RuntimeError(f"dispatch LP {sol.status} in year {self.year}, period {t}")
            X[t] = sol.values
        return X

    def _solve_batch(self, b, ub):
        from scipy.optimize import linprog

        Pn = b.shape[0]
        R, L = self.R, self.L
        A = sp.csr_matrix(self.A)
        eq = sp.kron(sp.eye(Pn), A[:R], format="csr")
        ge = sp.kron(sp.eye(Pn), A[R:2 * R], format="csr")
        le = sp.kron(sp.eye(Pn), A[2 * R:], format="csr")
        A_ub = sp.vstack([-ge, le], format="csr")
        b_ub = np.concatenate([-b[:, R:2 * R].ravel(), b[:, 2 * R:].ravel()])
        bounds = np.column_stack([np.zeros(Pn * self.n), ub.ravel()])
        res = linprog(np.tile(self.c, Pn), A_ub=A_ub, b_ub=b_ub, A_eq=eq,
                      b_eq=b[:, :R].ravel(), bounds=bounds, method="highs")
        if res.status != 0:
            raise RuntimeError(f"dispatch LP failed in year {self.year}: {res.message}")
        return np.asarray(res.x).reshape(Pn, self.n)

    def costs(self, X, weights, df) -> YearCosts:
        G, R, L = self.G, self.R, self.L
        P = X[:, :G]
        U = X[:, G:G + R]
        Ip = X[:, G + R:G + R + L]
        In = X[:, G + R + L:G + R + 2 * L]
        Z = X[:, G + R + 2 * L:]
        w = np.asarray(weights, dtype=float)

        def total(per_period):
            return math.fsum(np.asarray(per_period) * w)

        fuel = total(P @ self.fuel)
        vom = total(P @ self.vom)
        voll = total(U @ self.voll)
        wheel = total((Ip + In) @ self.wheel)
        reserve = total(Z @ self.voll)
        emis = total(P @ self.emis_cost)
        gen = math.fsum([fuel, vom, voll, wheel, reserve])
        return YearCosts(
            year=self.year,
            generation_cost=df * gen,
            emission_cost=df * emis,
            fuel_cost=df * fuel,
            vom_cost=df * vom,
            lost_load_cost=df * voll,
            wheeling_cost=df * wheel,
            reserve_penalty=df * reserve,
            unserved_mwh=total(U.sum(axis=1)),
            emissions_ton=total(P @ self.emis_rate),
            generation_mwh={g.id: total(P[:, k]) for k, g in enumerate(self.gens)},
            interface_mwh={l.id: total(Ip[:, k] - In[:, k]) for k, l in enumerate(self.ifaces)},
            discount=df,
        )


def _cf_matrix(ds, per_gen, n_periods):
    """(P, G) cf matrix with 1.0 for generators that do not follow a cf series."""
    out = np.ones((n_periods, len(ds.generators)))
    for k, g in enumerate(ds.generators):
        if g.uses_cf:
            out[:, k] = per_gen[g.id]
    return out


def _run_years(fn, n_years, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, range(1, n_years + 1)))
    return [fn(y) for y in range(1, n_years + 1)]


def _breakdown(mode, years):
    return CostBreakdown(mode, math.fsum(y.generation_cost for y in years),
                         math.fsum(y.emission_cost for y in years), years)


def lt_operate(ds: SystemDataset, scn: ScenarioSet, plan: ExpansionPlan, backend="builtin",
               printed_outage_sign=False, threads=1) -> CostBreakdown:
    """Dispatch each scenario with builds fixed; weight by hours and discount."""
    DF = discount_factors(ds.horizon.discount_rate, ds.horizon.n_years)
    T = ds.horizon.hours_per_year

    def one(y):
        sc = scn[y - 1]
        loads = np.array([[s.load_by_region[r.id] for r in ds.regions] for s in sc])
        per_gen = {g.id: np.array([s.cf_by_generator[g.id] for s in sc])
                   for g in ds.generators if g.uses_cf}
        cfs = _cf_matrix(ds, per_gen, len(sc))
        mf = np.column_stack([maintenance_factors(loads[:, k]) for k in range(len(ds.regions))])
        yd = _YearDispatch(ds, plan, y, printed_outage_sign)
        X = yd.solve(loads, cfs, mf, backend)
        weights = np.array([T * s.probability for s in sc])
        return yd.costs(X, weights, DF[y - 1])

    return _breakdown("lt", _run_years(one, ds.horizon.n_years, threads))


def st_operate(ds: SystemDataset, plan: ExpansionPlan, backend="builtin",
               printed_outage_sign=False, threads=1) -> CostBreakdown:
    """Dispatch every chronological hour with builds fixed."""
    DF = discount_factors(ds.horizon.discount_rate, ds.horizon.n_years)
    T = ds.horizon.hours_per_year

    def one(y):
        loads = np.column_stack([r.load_series.year(y - 1) for r in ds.regions])
        per_gen = {g.id: g.cf_series.year(y - 1) for g in ds.generators if g.uses_cf}
        cfs = _cf_matrix(ds, per_gen, T)
        mf = np.column_stack([maintenance_factors(loads[:, k]) for k in range(len(ds.regions))])
        yd = _YearDispatch(ds, plan, y, printed_outage_sign)
        X = yd.solve(loads, cfs, mf, backend)
        return yd.costs(X, np.ones(T), DF[y - 1])

    return _breakdown("st", _run_years(one, ds.horizon.n_years, threads))


def gap_value(lt_generation, lt_emission, st_generation, st_emission) -> float:
    """Relative shortfall of the LT estimate against ST: (ST - LT) / ST."""
    st_total = st_generation + st_emission
    if st_total == 0:
        raise ZeroDivisionError("short-term total cost is zero")
    return (st_total - (lt_generation + lt_emission)) / st_total


def gap_report(lt: CostBreakdown, st: CostBreakdown) -> GapReport:
    by_year = []
    for a, b in zip(lt.years, st.years):
        st_tot = b.generation_cost + b.emission_cost
        by_year.append({
            "year": a.year,
            "lt_generation_cost": a.generation_cost,
            "lt_emission_cost": a.emission_cost,
            "st_generation_cost": b.generation_cost,
            "st_emission_cost": b.emission_cost,
            "gap": gap_value(a.generation_cost, a.emission_cost, b.generation_cost,
                             b.emission_cost) if st_tot else 0.0,
        })
    return GapReport(lt.generation_cost, lt.emission_cost, st.generation_cost,
                     st.emission_cost,
                     gap_value(lt.generation_cost, lt.emission_cost, st.generation_cost,
                               st.emission_cost),
                     by_year)
