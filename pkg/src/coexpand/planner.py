"""Expansion planning estimator and the sequential (not co-optimized) variant."""
from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .core import SystemDataset, check_dataset
from .model import (DISPATCH, FLOW_NEG, FLOW_POS, GEN_BUILD, TX_BUILD, UNSERVED, BuiltModel,
                    build_model, cost_breakdown)
from .scenarios import ScenarioSet
from .solver import MipSolution, solve_mip

logger = logging.getLogger(__name__)


class PlanningError(RuntimeError):
    """The MIP produced no usable plan (infeasible or limit without incumbent)."""


@dataclass
class ExpansionPlan:
    """Integer build counts by (year, id); year is 1-based."""

    gen_builds: dict
    tx_builds: dict
    dispatch: dict = field(default_factory=dict)
    flows: dict = field(default_factory=dict)
    unserved: dict = field(default_factory=dict)

    def gen_units(self, ds: SystemDataset, year: int) -> dict:
        """Installed units per generator in ``year`` (existing plus builds so far)."""
        return {g.id: g.existing_units + sum(self.gen_builds.get((y, g.id), 0)
                                             for y in range(1, year + 1))
                for g in ds.generators}

    def tx_units(self, ds: SystemDataset, year: int) -> dict:
        return {l.id: l.existing_units + sum(self.tx_builds.get((y, l.id), 0)
                                             for y in range(1, year + 1))
                for l in ds.interfaces}

    def validate(self, ds: SystemDataset) -> list:
        out = []
        N = ds.horizon.n_years
        for kind, ents, builds in (("generator", ds.generators, self.gen_builds),
                                   ("interface", ds.interfaces, self.tx_builds)):
            known = {e.id for e in ents}
            for (y, i), v in builds.items():
                if i not in known or not 1 <= y <= N:
                    out.append(f"{kind} build ({y}, {i}) does not match the dataset")
                elif v < 0 or int(v) != v:
                    out.append(f"{kind} {i} year {y}: build {v} not a nonnegative integer")
            for e in ents:
                tot = 0
                for y in range(1, N + 1):
                    v = builds.get((y, e.id), 0)
                    tot += v
                    if v > e.max_annual_builds[y - 1]:
                        out.append(f"{kind} {e.id} year {y}: {v} exceeds annual limit")
                if tot > e.max_total_builds:
                    out.append(f"{kind} {e.id}: {tot} builds exceed total limit")
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["year", "kind", "id", "builds"])
        for (y, i), v in sorted(self.gen_builds.items()):
            w.writerow([y, "gen", i, int(v)])
        for (y, i), v in sorted(self.tx_builds.items()):
            w.writerow([y, "tx", i, int(v)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ExpansionPlan":
        gen, tx = {}, {}
        rows = csv.DictReader(io.StringIO(text))
        if rows.fieldnames != ["year", "kind", "id", "builds"]:
            raise ValueError(f"plan CSV header must be year,kind,id,builds; got {rows.fieldnames}")
        for row in rows:
            key = (int(row["year"]), row["id"])
            v = int(row["builds"])
            if row["kind"] == "gen":
                gen[key] = v
            elif row["kind"] == "tx":
                tx[key] = v
            else:
                raise ValueError(f"unknown plan kind {row['kind']!r}")
        return cls(gen, tx)

    @classmethod
    def empty(cls, ds: SystemDataset) -> "ExpansionPlan":
        N = ds.horizon.n_years
        return cls({(y, g.id): 0 for y in range(1, N + 1) for g in ds.generators},
                   {(y, l.id): 0 for y in range(1, N + 1) for l in ds.interfaces})


def plan_from_solution(built: BuiltModel, x) -> ExpansionPlan:
    gen, tx, disp, flows, unserved = {}, {}, {}, {}, {}
    keys = built.model.catalog.keys
    for i, key in enumerate(keys):
        kind = key[0]
        v = float(x[i])
        if kind == GEN_BUILD:
            gen[key[1], key[2]] = int(round(v))
        elif kind == TX_BUILD:
            tx[key[1], key[2]] = int(round(v))
        elif kind == DISPATCH:
            disp[key[1:]] = v
        elif kind == UNSERVED:
            unserved[key[1:]] = v
        elif kind == FLOW_POS:
            flows[key[1:]] = flows.get(key[1:], 0.0) + v
        elif kind == FLOW_NEG:
            flows[key[1:]] = flows.get(key[1:], 0.0) - v
    return ExpansionPlan(gen, tx, disp, flows, unserved)


def restrict_builds(built: BuiltModel, gen=None, tx=None):
    """Model copy with build variables pinned.

    ``gen``/``tx`` are either a mapping ``(year, id) -> count`` or the
    string ``"zero"``; ``None`` leaves that family free.
    """
    changes = {}
    for i, key in enumerate(built.model.catalog.keys):
        kind = key[0]
        fixed = gen if kind == GEN_BUILD else tx if kind == TX_BUILD else None
        if fixed is None:
            continue
        v = 0 if fixed == "zero" else fixed.get((key[1], key[2]), 0)
        changes[i] = (v, v)
    return built.model.with_bounds(changes)


class ExpansionPlanner(BaseEstimator):
    """Co-optimize generation and transmission builds for a scenario set.

    Parameters
    ----------
    engine : {"auto", "builtin", "highs"}
        MIP engine; "auto" keeps small models on the built-in solver.
    gap : float
        Relative optimality gap at which the search stops.
    node_limit : int
    printed_outage_sign : bool
        Use the ``+FOR`` availability form instead of the corrected one.
    fix_gen, fix_tx : mapping, "zero" or None
        Pin build variables (used by the sequential pipeline).
    """

    def __init__(self, engine="auto", gap=1e-6, node_limit=100000, printed_outage_sign=False,
                 fix_gen=None, fix_tx=None, time_limit=None):
        self.engine = engine
        self.gap = gap
        self.node_limit = node_limit
        self.printed_outage_sign = printed_outage_sign
        self.fix_gen = fix_gen
        self.fix_tx = fix_tx
        self.time_limit = time_limit

    def build(self, dataset: SystemDataset, scenarios: ScenarioSet) -> BuiltModel:
        return build_model(check_dataset(dataset), scenarios,
                           printed_outage_sign=self.printed_outage_sign)

    def fit(self, dataset: SystemDataset, scenarios: ScenarioSet):
        built = self.build(dataset, scenarios)
        model = built.model
        if self.fix_gen is not None or self.fix_tx is not None:
            model = restrict_builds(built, self.fix_gen, self.fix_tx)
        sol = solve_mip(model, self.gap, self.node_limit, self.engine, self.time_limit)
        return self._set_solution(built, model, sol)

    def _set_solution(self, built, model, sol: MipSolution):
        if not sol.has_solution:
            raise PlanningError(f"MIP ended with status {sol.status!r} and no plan")
        self.built_ = built
        self.model_ = model
        self.solution_ = sol
        self.objective_ = sol.objective
        self.plan_ = plan_from_solution(built, sol.values)
        self.costs_ = cost_breakdown(built, sol.values)
        return self

    def fit_solution(self, dataset, scenarios, solution: MipSolution):
        """Adopt an externally produced solution instead of solving."""
        built = self.build(dataset, scenarios)
        return self._set_solution(built, built.model, solution)

    def predict(self, dataset=None, scenarios=None) -> ExpansionPlan:
        check_is_fitted(self, "plan_")
        return self.plan_


def sequential_plan(dataset, scenarios, **planner_params) -> dict:
    """Generation first with existing transmission, then transmission only.

    Returns the two fitted stage planners and the combined NPV, which is the
    stage-2 objective evaluated on the full co-expansion model.
    """
    stage1 = ExpansionPlanner(fix_tx="zero", **planner_params).fit(dataset, scenarios)
    stage2 = ExpansionPlanner(fix_gen=stage1.plan_.gen_builds, **planner_params).fit(
        dataset, scenarios)
    total = stage2.built_.model.evaluate(stage2.solution_.values)
    return {"stage1": stage1, "stage2": stage2, "objective": total, "plan": stage2.plan_}
