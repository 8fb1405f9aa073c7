"""Assembly of the generation/transmission co-expansion MIP.

Dispatch ``P`` is the aggregate output (MW) of all units of a generator
type, so every cost term stays linear; build counts couple to operation
only through the capacity rows. Interface flow is split into nonnegative
forward/backward parts so wheeling prices ``|I|``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .core import SystemDataset, check_dataset, interface_incidence
from .linear import LinearModel
from .scenarios import ScenarioSet

logger = logging.getLogger(__name__)

GEN_BUILD = "gen_build"
TX_BUILD = "tx_build"
DISPATCH = "dispatch"
UNSERVED = "unserved"
FLOW_POS = "flow_pos"
FLOW_NEG = "flow_neg"

COST_TERMS = (
    "gen_build",
    "fixed_om",
    "fuel",
    "variable_om",
    "lost_load",
    "tx_build",
    "wheeling",
    "emission",
)


def discount_factor(d: float, y: int, n_years: int) -> float:
    """Discount factor of year ``y`` (1-based).

    The final year stands for itself repeated forever, so its factor is the
    whole tail of the geometric series from ``n_years`` on.
    """
    if d < 0:
        raise ValueError(f"discount rate {d} < 0")
    if not 1 <= y <= n_years:
        raise ValueError(f"year {y} outside 1..{n_years}")
    if y < n_years:
        return (1.0 + d) ** (-y)
    if d == 0:
        raise ValueError("end-year factor diverges for a zero discount rate")
    return (1.0 + d) ** (-n_years) * (1.0 + 1.0 / d)


def discount_factors(d: float, n_years: int) -> np.ndarray:
    return np.array([discount_factor(d, y, n_years) for y in range(1, n_years + 1)])


def derate(g, mf: float, printed_sign: bool = False) -> float:
    """Available fraction of installed capacity after outages.

    ``printed_sign=True`` reproduces ``1 - MOR*mf + FOR`` (forced outages
    adding capacity) for side-by-side comparison only.
    """
    if not 0.0 <= mf <= 1.0:
        raise ValueError(f"maintenance factor {mf} not in [0,1]")
    if printed_sign:
        return 1.0 - g.maintenance_outage_rate * mf + g.forced_outage_rate
    return max(0.0, 1.0 - g.maintenance_outage_rate * mf - g.forced_outage_rate)


def maintenance_factors(loads) -> np.ndarray:
    """Off-peak weighting per period: 0 at the peak load, 1 at the minimum."""
    loads = np.asarray(loads, dtype=float)
    hi, lo = loads.max(), loads.min()
    if hi == lo:
        return np.zeros_like(loads)
    return (hi - loads) / (hi - lo)


def maintenance_factor(region_id: str, scenario, year_scenarios) -> float:
    loads = np.array([s.load_by_region[region_id] for s in year_scenarios])
    hi, lo = loads.max(), loads.min()
    if hi == lo:
        return 0.0
    return float((hi - scenario.load_by_region[region_id]) / (hi - lo))


def _capacity_weight(g, mf, cf, printed_sign):
    """MW of dispatchable output per installed MW in one period."""
    a = derate(g, mf, printed_sign)
    return a * cf if g.uses_cf else a


@dataclass
class BuiltModel:
    """A LinearModel plus the bookkeeping needed to read results back."""

    model: LinearModel
    dataset: SystemDataset
    scenarios: ScenarioSet
    discount: np.ndarray
    warnings: list = field(default_factory=list)

    def index(self, *key) -> int:
        return self._key_index[key]

    def __post_init__(self):
        self._key_index = {k: i for i, k in enumerate(self.model.catalog.keys)}


def _var_name(prefix, y, s, ident):
    return f"{prefix}_y{y}_s{s}_{ident}" if s is not None else f"{prefix}_y{y}_{ident}"


def build_model(ds: SystemDataset, scn: ScenarioSet, printed_outage_sign: bool = False,
                name: str = "coexpansion") -> BuiltModel:
    """Assemble the co-expansion MIP for ``ds`` over scenario set ``scn``."""
    check_dataset(ds)
    hz = ds.horizon
    N, T = hz.n_years, hz.hours_per_year
    if scn.n_years != N:
        raise ValueError(f"scenario set covers {scn.n_years} years, dataset has {N}")
    for y in range(N):
        for s in scn[y]:
            vals = list(s.load_by_region.values()) + list(s.cf_by_generator.values())
            if not all(math.isfinite(v) for v in vals) or not math.isfinite(s.probability):
                raise ValueError(f"non-finite scenario parameter in year {y + 1}")
            if set(s.load_by_region) != set(ds.region_ids):
                raise ValueError("scenario regions do not match dataset regions")

    DF = discount_factors(hz.discount_rate, N)
    p_credit = ds.reserve_import_credit
    m = LinearModel(name)
    gens = list(ds.generators)
    ifaces = list(ds.interfaces)
    incidence = {r.id: interface_incidence(ds, r.id) for r in ds.regions}

    # build variables; annual build limits become bounds
    xg = {}
    for y in range(1, N + 1):
        for g in gens:
            ub = min(g.max_annual_builds[y - 1], g.max_total_builds)
            xg[y, g.id] = m.add_var(_var_name("xg", y, None, g.id), 0, ub, True, GEN_BUILD,
                                    (GEN_BUILD, y, g.id))
    xl = {}
    for y in range(1, N + 1):
        for l in ifaces:
            ub = min(l.max_annual_builds[y - 1], l.max_total_builds)
            xl[y, l.id] = m.add_var(_var_name("xl", y, None, l.id), 0, ub, True, TX_BUILD,
                                    (TX_BUILD, y, l.id))

    P, U, Ip, In = {}, {}, {}, {}
    for y in range(1, N + 1):
        for s in range(len(scn[y - 1])):
            for g in gens:
                P[y, s, g.id] = m.add_var(_var_name("p", y, s, g.id), kind=DISPATCH,
                                          key=(DISPATCH, y, s, g.id))
            for r in ds.regions:
                U[y, s, r.id] = m.add_var(_var_name("use", y, s, r.id), kind=UNSERVED,
                                          key=(UNSERVED, y, s, r.id))
            for l in ifaces:
                Ip[y, s, l.id] = m.add_var(_var_name("ip", y, s, l.id), kind=FLOW_POS,
                                           key=(FLOW_POS, y, s, l.id))
                In[y, s, l.id] = m.add_var(_var_name("in", y, s, l.id), kind=FLOW_NEG,
                                           key=(FLOW_NEG, y, s, l.id))

    # objective
    constant = 0.0
    for y in range(1, N + 1):
        df = DF[y - 1]
        for g in gens:
            fom_tail = g.fixed_om * g.unit_capacity * DF[y - 1:].sum()
            m.add_objective(xg[y, g.id], df * g.build_cost_by_year[y - 1] + fom_tail)
            constant += df * g.fixed_om * g.unit_capacity * g.existing_units
        for l in ifaces:
            m.add_objective(xl[y, l.id], df * l.build_cost_by_year[y - 1])
        for s, sc in enumerate(scn[y - 1]):
            w = df * T * sc.probability
            for g in gens:
                energy = (g.heat_rate * g.fuel_price_by_year[y - 1] + g.variable_om
                          + g.emission_price_by_year[y - 1] * g.emission_rate)
                m.add_objective(P[y, s, g.id], w * energy)
            for r in ds.regions:
                m.add_objective(U[y, s, r.id], w * r.voll)
            for l in ifaces:
                m.add_objective(Ip[y, s, l.id], w * l.wheeling_cost)
                m.add_objective(In[y, s, l.id], w * l.wheeling_cost)
    m.constant = constant

    warnings = []
    max_cum_g = {}
    max_cum_l = {}
    for g in gens:
        run = 0
        for y in range(1, N + 1):
            run += min(g.max_annual_builds[y - 1], g.max_total_builds)
            max_cum_g[y, g.id] = min(run, g.max_total_builds)
    for l in ifaces:
        run = 0
        for y in range(1, N + 1):
            run += min(l.max_annual_builds[y - 1], l.max_total_builds)
            max_cum_l[y, l.id] = min(run, l.max_total_builds)

    for y in range(1, N + 1):
        year_scn = scn[y - 1]
        mf = {r.id: maintenance_factors([sc.load_by_region[r.id] for sc in year_scn])
              for r in ds.regions}
        for s, sc in enumerate(year_scn):
            for r in ds.regions:
                rid = r.id
                load = sc.load_by_region[rid]
                # power balance; positive flow imports into the to-region
                row = {P[y, s, g.id]: 1.0 for g in ds.generators_in(rid)}
                row[U[y, s, rid]] = 1.0
                for lid, sign in incidence[rid]:
                    row[Ip[y, s, lid]] = float(sign)
                    row[In[y, s, lid]] = float(-sign)
                m.add_constraint(f"bal_y{y}_s{s}_{rid}", row, "=", load, "balance")

                # reserve: available capacity plus credited imports
                row = {}
                rhs = load + r.reserve_margin_by_year[y - 1]
                best = 0.0
                for g in ds.generators_in(rid):
                    a = _capacity_weight(g, mf[rid][s], sc.cf_by_generator.get(g.id, 1.0),
                                         printed_outage_sign)
                    rhs -= a * g.unit_capacity * g.existing_units
                    best += a * g.unit_capacity * max_cum_g[y, g.id]
                    for yp in range(1, y + 1):
                        row[xg[yp, g.id]] = row.get(xg[yp, g.id], 0.0) + a * g.unit_capacity
                for lid, sign in incidence[rid]:
                    row[Ip[y, s, lid]] = p_credit * sign
                    row[In[y, s, lid]] = -p_credit * sign
                    l = next(i for i in ifaces if i.id == lid)
                    best += p_credit * l.unit_capacity * (l.existing_units + max_cum_l[y, lid])
                if best < rhs - 1e-9:
                    warnings.append(f"res_y{y}_s{s}_{rid}: short by {rhs - best:.6g} MW "
                                    "even at maximum builds")
                m.add_constraint(f"res_y{y}_s{s}_{rid}", row, ">=", rhs, "reserve")

            for g in gens:
                cf = sc.cf_by_generator.get(g.id, 1.0)
                a = _capacity_weight(g, mf[g.region][s], cf, printed_outage_sign)
                row = {P[y, s, g.id]: 1.0}
                for yp in range(1, y + 1):
                    row[xg[yp, g.id]] = -a * g.unit_capacity
                # variable resources are capped by cf, which implies the plain capacity row
                fam = "resource_cap" if g.uses_cf else "dispatch_cap"
                tag = "wcap" if g.uses_cf else "gcap"
                m.add_constraint(f"{tag}_y{y}_s{s}_{g.id}", row, "<=",
                                 a * g.unit_capacity * g.existing_units, fam)

            for l in ifaces:
                row = {Ip[y, s, l.id]: 1.0, In[y, s, l.id]: 1.0}
                for yp in range(1, y + 1):
                    row[xl[yp, l.id]] = -l.unit_capacity
                m.add_constraint(f"flow_y{y}_s{s}_{l.id}", row, "<=",
                                 l.unit_capacity * l.existing_units, "flow_cap")

        for r in ds.regions:
            rps = r.rps_by_year[y - 1]
            if rps <= 0:
                continue
            row = {}
            rhs = 0.0
            for g in ds.generators_in(r.id):
                share = (1.0 if g.is_renewable else 0.0) - rps
                rhs -= share * g.unit_capacity * g.existing_units
                for yp in range(1, y + 1):
                    row[xg[yp, g.id]] = row.get(xg[yp, g.id], 0.0) + share * g.unit_capacity
            m.add_constraint(f"rps_y{y}_{r.id}", row, ">=", rhs, "rps")

    for g in gens:
        m.add_constraint(f"gmax_{g.id}", {xg[y, g.id]: 1.0 for y in range(1, N + 1)}, "<=",
                         g.max_total_builds, "gen_build_cap")
    for l in ifaces:
        m.add_constraint(f"lmax_{l.id}", {xl[y, l.id]: 1.0 for y in range(1, N + 1)}, "<=",
                         l.max_total_builds, "tx_build_cap")

    m.check()
    for w in warnings:
        logger.warning("reserve infeasible: %s", w)
    return BuiltModel(m, ds, scn, DF, warnings)


def cost_breakdown(built: BuiltModel, x) -> dict:
    """Recompute the eight NPV cost sums directly from dataset parameters."""
    ds, scn, DF = built.dataset, built.scenarios, built.discount
    x = np.asarray(x, dtype=float)
    N, T = ds.horizon.n_years, ds.horizon.hours_per_year
    terms = dict.fromkeys(COST_TERMS, 0.0)
    val = lambda *k: x[built.index(*k)]  # noqa: E731
    for y in range(1, N + 1):
        df = DF[y - 1]
        for g in ds.generators:
            built_y = val(GEN_BUILD, y, g.id)
            cum = g.existing_units + sum(val(GEN_BUILD, yp, g.id) for yp in range(1, y + 1))
            terms["gen_build"] += df * g.build_cost_by_year[y - 1] * built_y
            terms["fixed_om"] += df * g.fixed_om * g.unit_capacity * cum
        for l in ds.interfaces:
            terms["tx_build"] += df * l.build_cost_by_year[y - 1] * val(TX_BUILD, y, l.id)
        for s, sc in enumerate(scn[y - 1]):
            w = df * T * sc.probability
            for g in ds.generators:
                p = val(DISPATCH, y, s, g.id)
                terms["fuel"] += w * g.heat_rate * g.fuel_price_by_year[y - 1] * p
                terms["variable_om"] += w * g.variable_om * p
                terms["emission"] += w * g.emission_price_by_year[y - 1] * g.emission_rate * p
            for r in ds.regions:
                terms["lost_load"] += w * r.voll * val(UNSERVED, y, s, r.id)
            for l in ds.interfaces:
                flow = val(FLOW_POS, y, s, l.id) + val(FLOW_NEG, y, s, l.id)
                terms["wheeling"] += w * l.wheeling_cost * flow
    terms["total"] = sum(terms[k] for k in COST_TERMS)
    return terms
