import csv
import io
import json

import pytest

from coexpand.cli import main
from coexpand.io import dataset_files, write_atomic
from coexpand.synthetic import toy_system

TOY_ARGS = ["--blocks", "4", "--bins", "2", "--peak-fraction", str(2 / 24), "--gap", "1e-9"]


@pytest.fixture
def toy_dir(tmp_path):
    d = tmp_path / "toy"
    write_atomic(d, dataset_files(toy_system(), {"n_load_blocks": 4, "n_wind_bins": 2,
                                                 "peak_fraction": 2 / 24}))
    return d


def test_validate_ok(toy_dir, capsys):
    assert main(["validate", "--dataset", str(toy_dir)]) == 0
    assert "2 regions" in capsys.readouterr().out


def test_validate_bundled(capsys):
    assert main(["validate"]) == 0
    assert "3 regions" in capsys.readouterr().out


def test_validation_failure_exit_1(toy_dir):
    p = toy_dir / "regions.csv"
    rows = list(csv.reader(io.StringIO(p.read_text())))
    col = rows[0].index("voll")
    rows[1][col] = "-5"
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    p.write_text(buf.getvalue())
    assert main(["validate", "--dataset", str(toy_dir)]) == 1


def test_format_error_exit_3(toy_dir, tmp_path):
    (toy_dir / "config.yaml").write_text("horizon: [unclosed\n")
    assert main(["validate", "--dataset", str(toy_dir)]) == 3
    assert main(["validate", "--dataset", str(tmp_path / "nowhere")]) == 3


def test_seed_conflicts_with_dataset(toy_dir):
    assert main(["validate", "--dataset", str(toy_dir), "--seed", "7"]) == 1


@pytest.mark.parametrize("case,count", [("20x1", 20), ("20x8", 160)])
def test_scenario_counts_on_bundled_data(tmp_path, case, count):
    assert main(["scenarios", "--case", case, "--out", str(tmp_path / case)]) == 0
    rows = list(csv.DictReader((tmp_path / case / "scenarios.csv").open()))
    years = {r["year"] for r in rows}
    assert len(rows) == count * len(years)


def test_node_limit_exit_2(toy_dir, tmp_path):
    args = ["solve", "--dataset", str(toy_dir), "--engine", "builtin", "--blocks", "4",
            "--bins", "2", "--peak-fraction", str(2 / 24), "--gap", "0", "--node-limit", "1",
            "--out", str(tmp_path / "s")]
    assert main(args) == 2


def test_infeasible_exit_1(toy_dir):
    p = toy_dir / "regions.csv"
    rows = list(csv.reader(io.StringIO(p.read_text())))
    col = rows[0].index("reserve_margin")
    for r in rows[1:]:
        r[col] = "1000000"
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    p.write_text(buf.getvalue())
    assert main(["solve", "--dataset", str(toy_dir)] + TOY_ARGS) == 1


def test_solve_export_import_and_simulate(toy_dir, tmp_path, capsys):
    out = tmp_path / "solve"
    mps = tmp_path / "model.mps"
    assert main(["solve", "--dataset", str(toy_dir), "--out", str(out),
                 "--export-mps", str(mps)] + TOY_ARGS) == 0
    assert mps.read_text().startswith("NAME ")
    first = json.loads((out / "solve.json").read_text())

    again = tmp_path / "imported"
    assert main(["solve", "--dataset", str(toy_dir), "--out", str(again), "--import-solution",
                 str(out / "solution.csv")] + TOY_ARGS) == 0
    second = json.loads((again / "solve.json").read_text())
    assert second["objective"] == pytest.approx(first["objective"], rel=1e-9)
    assert (again / "plan.csv").read_text() == (out / "plan.csv").read_text()

    sim = tmp_path / "sim"
    assert main(["simulate", "--dataset", str(toy_dir), "--plan", str(out / "plan.csv"),
                 "--out", str(sim)] + TOY_ARGS) == 0
    rep = json.loads((sim / "gap_report.json").read_text())
    assert set(rep) >= {"gap", "lt_generation_cost", "st_emission_cost"}
    assert (sim / "gap_by_year.csv").read_text().startswith("year,")


def test_bad_solution_file_exit_3(toy_dir, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("variable,value\nnot_a_var,1\n")
    assert main(["solve", "--dataset", str(toy_dir), "--import-solution", str(bad),
                 "--out", str(tmp_path / "o")] + TOY_ARGS) == 3


def test_run_case_compare_and_sequential(toy_dir, tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["run-case", "--dataset", str(toy_dir), "--name", "t", "--out", str(out)]
                    + TOY_ARGS) == 0
    capsys.readouterr()
    assert main(["compare", str(a), str(b)]) == 0
    table = capsys.readouterr().out
    assert table.startswith("metric,t#0,t#1,delta_t#1")
    assert main(["compare", str(a), str(tmp_path / "missing")]) == 3
    assert main(["sequential", "--dataset", str(toy_dir), "--out", str(tmp_path / "seq")]
                + TOY_ARGS) == 0
    doc = json.loads((tmp_path / "seq" / "sequential.json").read_text())
    assert doc["delta_npv"] >= -1e-6 * abs(doc["cooptimized_npv"])


def test_global_flags_before_subcommand(toy_dir, capsys):
    assert main(["--dataset", str(toy_dir), "validate"]) == 0
    assert "2 regions" in capsys.readouterr().out
