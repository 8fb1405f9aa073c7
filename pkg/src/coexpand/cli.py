"""``coexpand`` command line.

Exit codes: 0 ok, 1 validation failure or infeasible model, 2 solver limit
reached, 3 I/O or file-format error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from importlib import resources
from pathlib import Path

from .cases import (NON_SYNC, SYNC, CaseError, CaseSpec, chronology_csv, compare_cases,
                    not_cooptimized_pipeline, run_case, scenarios_csv, standard_cases)
from .core import validate_dataset
from .dispatch import gap_report, lt_operate, st_operate
from .io import DatasetFormatError, read_dataset, write_atomic
from .planner import ExpansionPlan, ExpansionPlanner, PlanningError
from .solver import MpsError, export_mps, import_solution, write_solution
from .synthetic import DESK_EI_SEED, desk_ei

EXIT_OK, EXIT_INVALID, EXIT_LIMIT, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("coexpand")


def bundled_dataset() -> Path:
    return Path(str(resources.files("coexpand") / "data" / "desk_ei"))


class _Fail(Exception):
    def __init__(self, code, msg):
        super().__init__(msg)
        self.code = code


def _dataset(args):
    if args.seed is not None and args.seed != DESK_EI_SEED:
        if args.dataset is not None:
            raise _Fail(EXIT_INVALID, "--seed regenerates desk-EI and cannot be combined with "
                                      "--dataset")
        return desk_ei(seed=args.seed)
    path = Path(args.dataset) if args.dataset else bundled_dataset()
    try:
        ds, _ = read_dataset(path)
    except DatasetFormatError as exc:
        raise _Fail(EXIT_IO, str(exc)) from exc
    except OSError as exc:
        raise _Fail(EXIT_IO, f"cannot read dataset: {exc}") from exc
    report = validate_dataset(ds)
    if report:
        raise _Fail(EXIT_INVALID, "dataset invalid:\n  " + "\n  ".join(report))
    return ds


def _case(args) -> CaseSpec:
    solver = dict(gap=args.gap, node_limit=args.node_limit, engine=args.engine,
                  external=args.external)
    if args.case:
        named = {c.name: c for c in standard_cases(**solver)}
        if args.case not in named:
            raise _Fail(EXIT_INVALID, f"unknown case {args.case!r}; choose from {sorted(named)}")
        return named[args.case]
    try:
        return CaseSpec(args.name or f"{args.blocks}x{args.bins}", args.blocks, args.bins,
                        NON_SYNC if args.nonsync else SYNC, args.peak_fraction, **solver)
    except ValueError as exc:
        raise _Fail(EXIT_INVALID, str(exc)) from exc


def _out(args, default=None) -> Path | None:
    return Path(args.out) if args.out else default


def _emit(files: dict, out: Path | None):
    if out is None:
        for name, text in files.items():
            sys.stdout.write(f"== {name}\n{text}")
        return
    try:
        write_atomic(out, files)
    except OSError as exc:
        raise _Fail(EXIT_IO, f"cannot write {out}: {exc}") from exc
    print(f"wrote {', '.join(sorted(files))} to {out}")


def _read_text(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise _Fail(EXIT_IO, f"cannot read {path}: {exc}") from exc


def cmd_validate(args):
    ds = _dataset(args)
    hz = ds.horizon
    print(f"ok: {len(ds.regions)} regions, {len(ds.generators)} generator types, "
          f"{len(ds.interfaces)} interfaces, {hz.n_years} years x {hz.hours_per_year} hours")
    return EXIT_OK


def cmd_scenarios(args):
    ds = _dataset(args)
    case = _case(args)
    try:
        scn = case.builder(ds.horizon.hours_per_year).fit_transform(ds)
    except ValueError as exc:
        raise _Fail(EXIT_INVALID, str(exc)) from exc
    _emit({"scenarios.csv": scenarios_csv(ds, scn), "theta.csv": chronology_csv(scn)},
          _out(args))
    return EXIT_OK


def _built(args):
    ds = _dataset(args)
    case = _case(args)
    scn = case.builder(ds.horizon.hours_per_year).fit_transform(ds)
    planner = ExpansionPlanner(engine=case.solver_engine, gap=case.gap,
                               node_limit=case.node_limit)
    return ds, case, scn, planner, planner.build(ds, scn)


def cmd_build_model(args):
    _, _, _, _, built = _built(args)
    files = {"model_summary.json": json.dumps(built.model.summary(), indent=2,
                                              sort_keys=True) + "\n"}
    if args.export_mps:
        _write_file(args.export_mps, export_mps(built.model))
    _emit(files, _out(args))
    return EXIT_OK


def _write_file(path, text):
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)
    except OSError as exc:
        raise _Fail(EXIT_IO, f"cannot write {path}: {exc}") from exc


def cmd_solve(args):
    ds, case, scn, planner, built = _built(args)
    if args.export_mps:
        _write_file(args.export_mps, export_mps(built.model))
    try:
        if args.import_solution:
            sol = import_solution(built.model, _read_text(args.import_solution))
            planner.fit_solution(ds, scn, sol)
        else:
            planner.fit(ds, scn)
    except MpsError as exc:
        raise _Fail(EXIT_IO, str(exc)) from exc
    except PlanningError as exc:
        code = EXIT_LIMIT if "limit" in str(exc) else EXIT_INVALID
        raise _Fail(code, str(exc)) from exc
    sol = planner.solution_
    doc = {"status": sol.status, "engine": sol.engine, "objective": sol.objective,
           "best_bound": sol.best_bound, "gap": sol.gap, "node_count": sol.node_count,
           "costs": {k: float(v) for k, v in planner.costs_.items()}}
    _emit({"plan.csv": planner.plan_.to_csv(),
           "solution.csv": write_solution(built.model, sol.values),
           "solve.json": json.dumps(doc, indent=2, sort_keys=True) + "\n"}, _out(args))
    print(f"status {sol.status}, objective {sol.objective!r}")
    return EXIT_LIMIT if sol.status == "node_limit" else EXIT_OK


def cmd_simulate(args):
    ds = _dataset(args)
    try:
        plan = ExpansionPlan.from_csv(_read_text(args.plan))
    except ValueError as exc:
        raise _Fail(EXIT_IO, f"bad plan file: {exc}") from exc
    problems = plan.validate(ds)
    if problems:
        raise _Fail(EXIT_INVALID, "plan invalid:\n  " + "\n  ".join(problems))
    backend = args.backend
    files = {}
    lt = st = None
    if args.mode in ("lt", "gap"):
        case = _case(args)
        scn = case.builder(ds.horizon.hours_per_year).fit_transform(ds)
        lt = lt_operate(ds, scn, plan, backend=backend, threads=args.threads)
    if args.mode in ("st", "gap"):
        st = st_operate(ds, plan, backend=backend, threads=args.threads)
    if args.mode == "gap":
        rep = gap_report(lt, st)
        doc = {k: v for k, v in rep.to_dict().items() if k != "by_year"}
        files["gap_report.json"] = json.dumps(doc, indent=2, sort_keys=True) + "\n"
        files["gap_by_year.csv"] = rep.by_year_csv()
        print(f"gap {rep.gap:.6%}")
    else:
        res = lt if lt is not None else st
        files[f"{args.mode}_costs.json"] = json.dumps(
            {"mode": res.mode, "generation_cost": res.generation_cost,
             "emission_cost": res.emission_cost, "total": res.total,
             "by_year": [{"year": y.year, "generation_cost": y.generation_cost,
                          "emission_cost": y.emission_cost, "unserved_mwh": y.unserved_mwh,
                          "emissions_ton": y.emissions_ton} for y in res.years]},
            indent=2, sort_keys=True) + "\n"
    _emit(files, _out(args))
    return EXIT_OK


def cmd_run_case(args):
    ds = _dataset(args)
    case = _case(args)
    out = _out(args, Path("runs") / case.name)
    res = run_case(ds, case, out, threads=args.threads)
    print(f"{case.name}: status {res['status']}, bundle {out}")
    return EXIT_LIMIT if res["status"] == "node_limit" else EXIT_OK


def cmd_compare(args):
    table = compare_cases(args.bundles)
    if args.out:
        _write_file(args.out, table)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(table)
    return EXIT_OK


def cmd_sequential(args):
    ds = _dataset(args)
    case = _case(args)
    out = _out(args, Path("runs") / f"{case.name}-sequential")
    res = not_cooptimized_pipeline(ds, case, out, threads=args.threads)
    rep = res["report"]
    print(f"sequential NPV {rep['sequential_npv']!r}, co-optimized {rep['cooptimized_npv']!r}, "
          f"delta {rep['delta_npv']!r} ({rep['delta_pct']:.4f}%)")
    return EXIT_LIMIT if res["status"] == "node_limit" else EXIT_OK


def _add_case_args(p):
    g = p.add_argument_group("case")
    g.add_argument("--case", help="named case: 20x1, 20x2-sync, 20x2-nonsync, 20x4, 20x8")
    g.add_argument("--name")
    g.add_argument("--blocks", type=int, default=20, help="load blocks per year")
    g.add_argument("--bins", type=int, default=1, help="wind bins per load block")
    g.add_argument("--nonsync", action="store_true", help="split each region's wind separately")
    g.add_argument("--peak-fraction", type=float, default=None)
    s = p.add_argument_group("solver")
    s.add_argument("--gap", type=float, default=1e-6)
    s.add_argument("--node-limit", type=int, default=100000)
    s.add_argument("--engine", choices=("auto", "builtin", "highs"), default="auto")
    s.add_argument("--external", action="store_true", help="solve with HiGHS")


def build_parser() -> argparse.ArgumentParser:
    def global_flags(suppress):
        # sub-commands repeat the global flags; SUPPRESS keeps them from
        # overwriting values given before the sub-command name
        kw = (lambda d: {"default": argparse.SUPPRESS}) if suppress else (lambda d: {"default": d})
        g = argparse.ArgumentParser(add_help=False)
        g.add_argument("--dataset", help="dataset directory (default: bundled desk-EI)",
                       **kw(None))
        g.add_argument("--out", help="output directory (or file for compare)", **kw(None))
        g.add_argument("--seed", type=int,
                       help="regenerate desk-EI with this seed instead of reading files",
                       **kw(None))
        g.add_argument("--threads", type=int, **kw(1))
        g.add_argument("-v", "--verbose", action="store_true", **kw(False))
        return g

    common = global_flags(True)
    p = argparse.ArgumentParser(prog="coexpand", parents=[global_flags(False)],
                                description="Generation and transmission co-expansion planning")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("validate", parents=[common], help="check a dataset").set_defaults(
        fn=cmd_validate)
    sp = sub.add_parser("scenarios", parents=[common], help="build the scenario set")
    _add_case_args(sp)
    sp.set_defaults(fn=cmd_scenarios)

    sp = sub.add_parser("build-model", parents=[common], help="assemble the MIP")
    _add_case_args(sp)
    sp.add_argument("--export-mps")
    sp.set_defaults(fn=cmd_build_model)

    sp = sub.add_parser("solve", parents=[common], help="solve the planning MIP")
    _add_case_args(sp)
    sp.add_argument("--export-mps")
    sp.add_argument("--import-solution", help="variable,value CSV from an external solver")
    sp.set_defaults(fn=cmd_solve)

    sp = sub.add_parser("simulate", parents=[common], help="LT/ST dispatch of a fixed plan")
    _add_case_args(sp)
    sp.add_argument("--plan", required=True)
    sp.add_argument("--mode", choices=("lt", "st", "gap"), default="gap")
    sp.add_argument("--backend", choices=("builtin", "highs"), default="highs")
    sp.set_defaults(fn=cmd_simulate)

    sp = sub.add_parser("run-case", parents=[common], help="plan + simulate, write a bundle")
    _add_case_args(sp)
    sp.set_defaults(fn=cmd_run_case)

    sp = sub.add_parser("compare", parents=[common], help="compare case bundles")
    sp.add_argument("bundles", nargs="+")
    sp.set_defaults(fn=cmd_compare)

    sp = sub.add_parser("sequential", parents=[common],
                        help="generation-then-transmission pipeline vs co-optimization")
    _add_case_args(sp)
    sp.set_defaults(fn=cmd_sequential)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.fn(args)
    except _Fail as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except CaseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.stage in ("load", "write", "compare"):
            return EXIT_IO
        if exc.stage == "solve" and "limit" in str(exc):
            return EXIT_LIMIT
        return EXIT_INVALID
    except DatasetFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
