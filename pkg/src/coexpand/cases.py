"""Case orchestration: scenario construction, planning, simulation, bundles."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path

from .core import SystemDataset, check_dataset, interface_incidence
from .dispatch import gap_report, lt_operate, st_operate
from .io import fingerprint, read_dataset, write_atomic
from .model import DISPATCH, FLOW_NEG, FLOW_POS
from .planner import ExpansionPlanner, PlanningError, sequential_plan
from .scenarios import ScenarioBuilder, ScenarioSet

logger = logging.getLogger(__name__)

SYNC = "synchronized"
NON_SYNC = "non_synchronized"
LIMIT_STATUSES = ("node_limit",)
COMPARE_METRICS = (
    "wind_built_mw",
    "total_gen_built_mw",
    "tx_built_mw",
    "gen_build_cost_npv",
    "tx_build_cost_npv",
    "total_npv",
    "emissions_ton",
)


class CaseError(RuntimeError):
    """A case stage failed; ``stage`` names which one."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


@dataclass(frozen=True)
class CaseSpec:
    """One planning case: scenario resolution plus solver settings.

    ``peak_fraction=None`` sizes the preserved peak block at one hour per
    wind bin, so the annual peak hour sits alone in its sub-scenario.
    """

    name: str
    n_load_blocks: int = 20
    n_wind_bins: int = 1
    sync: str = SYNC
    peak_fraction: float | None = None
    gap: float = 1e-6
    node_limit: int = 100000
    engine: str = "auto"
    external: bool = False

    def __post_init__(self):
        if self.sync not in (SYNC, NON_SYNC):
            raise ValueError(f"sync must be {SYNC!r} or {NON_SYNC!r}")
        if self.sync == NON_SYNC and self.n_wind_bins != 2:
            raise ValueError("non-synchronized cases need n_wind_bins = 2")
        if self.n_load_blocks < 1 or self.n_wind_bins < 1:
            raise ValueError("n_load_blocks and n_wind_bins must be >= 1")

    def resolved_peak_fraction(self, hours: int) -> float:
        return self.peak_fraction if self.peak_fraction is not None else self.n_wind_bins / hours

    def builder(self, hours: int) -> ScenarioBuilder:
        return ScenarioBuilder(self.n_load_blocks, self.n_wind_bins,
                               self.resolved_peak_fraction(hours), self.sync == SYNC)

    @property
    def solver_engine(self) -> str:
        return "highs" if self.external else self.engine

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "CaseSpec":
        return cls(**d)


def standard_cases(**solver) -> list:
    """The five scenario resolutions compared throughout the study."""
    return [
        CaseSpec("20x1", 20, 1, SYNC, **solver),
        CaseSpec("20x2-sync", 20, 2, SYNC, **solver),
        CaseSpec("20x2-nonsync", 20, 2, NON_SYNC, **solver),
        CaseSpec("20x4", 20, 4, SYNC, **solver),
        CaseSpec("20x8", 20, 8, SYNC, **solver),
    ]


def _load(dataset):
    if isinstance(dataset, SystemDataset):
        return dataset
    try:
        ds, _ = read_dataset(dataset)
    except (OSError, ValueError) as exc:
        raise CaseError("load", str(exc)) from exc
    return ds


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _num(v) -> str:
    v = float(v)
    return repr(0.0 if v == 0 else v)


def _json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=True) + "\n"


def scenarios_csv(ds: SystemDataset, scn: ScenarioSet) -> str:
    cf_ids = list(scn.cf_generator_ids)
    header = (["year", "scenario", "probability", "duration_hours", "system_load"]
              + [f"load_{r}" for r in ds.region_ids] + [f"cf_{g}" for g in cf_ids])
    rows = []
    for y in range(scn.n_years):
        for s, sc in enumerate(scn[y]):
            rows.append([y + 1, s, _num(sc.probability), sc.duration_hours, _num(sc.system_load)]
                        + [_num(sc.load_by_region[r]) for r in ds.region_ids]
                        + [_num(sc.cf_by_generator[g]) for g in cf_ids])
    return _csv(header, rows)


def chronology_csv(scn: ScenarioSet) -> str:
    rows = [(y + 1, h, int(s)) for y, m in enumerate(scn.chronology) for h, s in enumerate(m)]
    return _csv(("year", "hour", "scenario"), rows)


def _annual_flows(ds, built, x):
    """Scenario-weighted interface energy per year from the planning solution."""
    T = ds.horizon.hours_per_year
    out = {}
    for y in range(1, ds.horizon.n_years + 1):
        for l in ds.interfaces:
            fwd = rev = 0.0
            for s, sc in enumerate(built.scenarios[y - 1]):
                w = T * sc.probability
                fwd += w * x[built.index(FLOW_POS, y, s, l.id)]
                rev += w * x[built.index(FLOW_NEG, y, s, l.id)]
            out[y, l.id] = (fwd, rev)
    return out


def _metrics(ds, planner, flows) -> dict:
    plan, costs = planner.plan_, planner.costs_
    gens = {g.id: g for g in ds.generators}
    lines = {l.id: l for l in ds.interfaces}
    wind = sum(v * gens[i].unit_capacity for (_, i), v in plan.gen_builds.items()
               if gens[i].kind == "wind")
    total = sum(v * gens[i].unit_capacity for (_, i), v in plan.gen_builds.items())
    tx = sum(v * lines[i].unit_capacity for (_, i), v in plan.tx_builds.items())
    built, x = planner.built_, planner.solution_.values
    T = ds.horizon.hours_per_year
    emis = 0.0
    for y in range(1, ds.horizon.n_years + 1):
        for s, sc in enumerate(built.scenarios[y - 1]):
            for g in ds.generators:
                emis += T * sc.probability * g.emission_rate * x[built.index(DISPATCH, y, s, g.id)]
    out = {
        "wind_built_mw": float(wind),
        "total_gen_built_mw": float(total),
        "tx_built_mw": float(tx),
        "gen_build_cost_npv": float(costs["gen_build"]),
        "tx_build_cost_npv": float(costs["tx_build"]),
        "total_npv": float(planner.objective_),
        "emissions_ton": float(emis),
    }
    for r in ds.region_ids:
        net = 0.0
        for lid, sign in interface_incidence(ds, r):
            for y in range(1, ds.horizon.n_years + 1):
                fwd, rev = flows[y, lid]
                net += sign * (fwd - rev)
        out[f"net_interchange_{r}_mwh"] = float(net)
    return out


def _bundle_files(ds, case, scn, planner, lt, st, extra=None) -> dict:
    built, sol = planner.built_, planner.solution_
    flows = _annual_flows(ds, built, sol.values)
    gap = gap_report(lt, st)
    plan = planner.plan_
    gens = {g.id: g for g in ds.generators}
    lines = {l.id: l for l in ds.interfaces}
    by_year = []
    for kind, builds, ents in (("gen", plan.gen_builds, gens), ("tx", plan.tx_builds, lines)):
        for e_id in ents:
            cum = 0
            for y in range(1, ds.horizon.n_years + 1):
                v = int(builds.get((y, e_id), 0))
                cum += v
                cap = ents[e_id].unit_capacity
                by_year.append((y, kind, e_id, v, _num(v * cap), _num(cum * cap)))
    summary = built.model.summary()
    summary["n_scenarios_by_year"] = [len(s) for s in scn]
    summary["reserve_warnings"] = list(built.warnings)
    case_doc = {
        "case": case.to_dict(),
        "peak_fraction": case.resolved_peak_fraction(ds.horizon.hours_per_year),
        "dataset_fingerprint": fingerprint(ds),
        "solver": {
            "status": sol.status,
            "engine": sol.engine,
            "objective": sol.objective,
            "best_bound": sol.best_bound,
            "gap": sol.gap,
            "node_count": sol.node_count,
        },
        "costs": {k: float(v) for k, v in planner.costs_.items()},
        "metrics": _metrics(ds, planner, flows),
    }
    if extra:
        case_doc.update(extra)
    return {
        "case.json": _json(case_doc),
        "scenarios.csv": scenarios_csv(ds, scn),
        "theta.csv": chronology_csv(scn),
        "model_summary.json": _json(summary),
        "plan.csv": plan.to_csv(),
        "builds_by_year.csv": _csv(("year", "kind", "id", "builds", "built_mw", "cumulative_mw"),
                                   by_year),
        "flows.csv": _csv(("year", "interface", "forward_mwh", "reverse_mwh", "net_mwh"),
                          [(y, lid, _num(f), _num(r), _num(f - r))
                           for (y, lid), (f, r) in sorted(flows.items())]),
        "gap_report.json": _json({k: v for k, v in gap.to_dict().items() if k != "by_year"}),
        "gap_by_year.csv": gap.by_year_csv(),
    }


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except CaseError:
        raise
    except (ValueError, RuntimeError, PlanningError, ZeroDivisionError) as exc:
        raise CaseError(name, str(exc)) from exc


def _simulate(ds, scn, plan, threads):
    backend = "highs" if ds.horizon.hours_per_year > 200 else "builtin"
    lt = lt_operate(ds, scn, plan, backend=backend, threads=threads)
    st = st_operate(ds, plan, backend=backend, threads=threads)
    return lt, st


def prepare(dataset, case: CaseSpec):
    ds = _load(dataset)
    _stage("validate", check_dataset, ds)
    scn = _stage("scenarios", case.builder(ds.horizon.hours_per_year).fit_transform, ds)
    return ds, scn


def _planner(case, **fixed):
    return ExpansionPlanner(engine=case.solver_engine, gap=case.gap, node_limit=case.node_limit,
                            **fixed)


def run_case(dataset, case: CaseSpec, out=None, threads: int = 1) -> dict:
    """Plan and simulate one case; write the bundle to ``out`` if given.

    Returns ``{"files": {...}, "planner": ..., "scenarios": ..., "status": ...}``.
    """
    ds, scn = prepare(dataset, case)
    planner = _stage("solve", _planner(case).fit, ds, scn)
    lt, st = _stage("simulate", _simulate, ds, scn, planner.plan_, threads)
    files = _bundle_files(ds, case, scn, planner, lt, st, {"pipeline": "co-optimized"})
    if out is not None:
        try:
            write_atomic(out, files)
        except OSError as exc:
            raise CaseError("write", str(exc)) from exc
    return {"files": files, "planner": planner, "scenarios": scn, "dataset": ds,
            "status": planner.solution_.status, "lt": lt, "st": st}


def not_cooptimized_pipeline(dataset, case: CaseSpec, out=None, threads: int = 1,
                             compare: bool = True) -> dict:
    """Generation first on existing transmission, then transmission only.

    With ``compare=True`` the co-optimized objective is also solved and the
    cost delta is written to ``sequential.json`` (NPV and percent).
    """
    ds, scn = prepare(dataset, case)
    params = dict(engine=case.solver_engine, gap=case.gap, node_limit=case.node_limit)
    seq = _stage("solve", sequential_plan, ds, scn, **params)
    stage2 = seq["stage2"]
    report = {
        "stage1_objective": seq["stage1"].objective_,
        "stage1_status": seq["stage1"].solution_.status,
        "stage2_status": stage2.solution_.status,
        "sequential_npv": seq["objective"],
    }
    if compare:
        co = _stage("solve", _planner(case).fit, ds, scn)
        delta = seq["objective"] - co.objective_
        report.update({
            "cooptimized_npv": co.objective_,
            "cooptimized_status": co.solution_.status,
            "delta_npv": delta,
            "delta_pct": 100.0 * delta / abs(co.objective_) if co.objective_ else math.nan,
        })
    lt, st = _stage("simulate", _simulate, ds, scn, stage2.plan_, threads)
    files = _bundle_files(ds, case, scn, stage2, lt, st, {"pipeline": "sequential"})
    files["sequential.json"] = _json(report)
    if out is not None:
        try:
            write_atomic(out, files)
        except OSError as exc:
            raise CaseError("write", str(exc)) from exc
    return {"files": files, "planner": stage2, "scenarios": scn, "dataset": ds,
            "report": report, "status": stage2.solution_.status}


def _read_case(bundle) -> dict:
    if isinstance(bundle, dict):
        return json.loads(bundle["files"]["case.json"])
    path = Path(bundle) / "case.json"
    try:
        return json.loads(path.read_text())
    except (OSError, ValueError) as exc:
        raise CaseError("compare", f"cannot read {path}: {exc}") from exc


def compare_cases(bundles) -> str:
    """Side-by-side CSV of bundle metrics with deltas against the first bundle."""
    docs = [_read_case(b) for b in bundles]
    if len(docs) < 2:
        raise CaseError("compare", "need at least two bundles")
    fps = {d["dataset_fingerprint"] for d in docs}
    if len(fps) != 1:
        raise CaseError("compare", "bundles were produced from different datasets")
    names = [d["case"]["name"] for d in docs]
    if len(set(names)) != len(names):
        names = [f"{n}#{k}" for k, n in enumerate(names)]
    keys = list(COMPARE_METRICS) + sorted(k for k in docs[0]["metrics"]
                                          if k.startswith("net_interchange_"))
    header = ["metric"] + names + [f"delta_{n}" for n in names[1:]]
    rows = []
    for k in keys:
        vals = [float(d["metrics"][k]) for d in docs]
        rows.append([k] + [_num(v) for v in vals] + [_num(v - vals[0]) for v in vals[1:]])
    return _csv(header, rows)


def resimulate_bundle(dataset, bundle_dir, threads: int = 1):
    """Re-ingest ``plan.csv`` and re-run LT/ST simulation (round-trip check)."""
    from .planner import ExpansionPlan

    ds = _load(dataset)
    root = Path(bundle_dir)
    doc = json.loads((root / "case.json").read_text())
    case = CaseSpec.from_dict(doc["case"])
    plan = ExpansionPlan.from_csv((root / "plan.csv").read_text())
    scn = case.builder(ds.horizon.hours_per_year).fit_transform(ds)
    lt, st = _simulate(ds, scn, plan, threads)
    return gap_report(lt, st)


__all__ = [
    "CaseError",
    "CaseSpec",
    "NON_SYNC",
    "SYNC",
    "compare_cases",
    "not_cooptimized_pipeline",
    "resimulate_bundle",
    "run_case",
    "standard_cases",
]
