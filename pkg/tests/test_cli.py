import csv
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from hsx2 import cli
from hsx2.cli import (EXIT_INPUT, EXIT_INVARIANT, EXIT_OK, export_plot_data, load_scenario,
                      main, run_scenario, validate_scenario)
from hsx2.reference import hat

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"


def _rows(path):
    with open(path) as f:
        return list(csv.DictReader(f))


def _load(name):
    return json.loads((SCENARIOS / f"{name}.json").read_text())


def _write(tmp_path, obj, name="s.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return p


# run

def test_hat_scenario_matches_closed_form(tmp_path):
    assert main(["run", str(SCENARIOS / "a1.json"), "--out", str(tmp_path)]) == EXIT_OK
    rows = _rows(tmp_path / "a1" / "lagrangian.csv")
    assert rows and list(rows[0]) == ["t", "xi", "y", "U", "H", "V", "r"]
    for t in (1.0, 2.0, 4.0):
        sel = [r for r in rows if float(r["t"]) == t]
        xi = np.array([float(r["xi"]) for r in sel])
        for k, fn in (("y", hat.y), ("U", hat.U), ("V", hat.V)):
            vals = np.array([float(r[k]) for r in sel])
            assert np.max(np.abs(vals - fn(xi, t))) <= 1e-10
    report = json.loads((tmp_path / "a1" / "report.json").read_text())
    assert report["unexpected_failures"] == [] and len(report["residuals"]) == 2


def test_zero_scenario_outputs_zero(tmp_path):
    assert main(["run", str(SCENARIOS / "zero.json"), "--out", str(tmp_path)]) == EXIT_OK
    for r in _rows(tmp_path / "zero" / "lagrangian.csv"):
        assert float(r["U"]) == float(r["H"]) == float(r["V"]) == float(r["r"]) == 0.0
        assert float(r["y"]) == float(r["xi"])
    for r in _rows(tmp_path / "zero" / "eulerian.csv"):
        assert float(r["u"]) == float(r["F_mu"]) == float(r["F_nu"]) == 0.0


def test_invalid_alpha_needs_flag(tmp_path, capsys):
    path = str(SCENARIOS / "a4.json")
    assert main(["run", path, "--out", str(tmp_path)]) == EXIT_INPUT
    assert "--allow-invalid-alpha" in capsys.readouterr().err
    assert main(["run", path, "--out", str(tmp_path), "--allow-invalid-alpha"]) == EXIT_OK
    report = json.loads((tmp_path / "a4" / "report.json").read_text())
    assert report["checks"]["roundtrip:4"] is False
    assert report["diagnostic"]["4"]["sup_V_difference"] == pytest.approx(1 / 6, abs=1e-10)


def test_unexpected_failure_exits_with_invariant_code(tmp_path, capsys):
    obj = _load("a4")
    obj["expected_failures"] = []
    assert main(["run", str(_write(tmp_path, obj)), "--out", str(tmp_path),
                 "--allow-invalid-alpha"]) == EXIT_INVARIANT
    assert "check failed (unexpected): roundtrip:4" in capsys.readouterr().out


@pytest.mark.parametrize("name", ["a1", "a2", "a3", "intro", "random", "zero"])
def test_reruns_are_byte_identical(tmp_path, name):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", str(SCENARIOS / f"{name}.json"), "--out", str(a)]) == EXIT_OK
    assert main(["run", str(SCENARIOS / f"{name}.json"), "--out", str(b)]) == EXIT_OK
    files = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    assert files
    for rel in files:
        assert (a / rel).read_bytes() == (b / rel).read_bytes(), rel


def test_seed_flag_changes_random_data(tmp_path):
    main(["run", str(SCENARIOS / "random.json"), "--out", str(tmp_path / "a"), "--seed", "1"])
    main(["run", str(SCENARIOS / "random.json"), "--out", str(tmp_path / "b"), "--seed", "2"])
    fa = (tmp_path / "a" / "random" / "lagrangian.csv").read_bytes()
    fb = (tmp_path / "b" / "random" / "lagrangian.csv").read_bytes()
    assert fa != fb


def test_mode_flag_runs_picard(tmp_path):
    assert main(["run", str(SCENARIOS / "a1.json"), "--out", str(tmp_path), "--mode", "both"]) == EXIT_OK
    checks = json.loads((tmp_path / "a1" / "report.json").read_text())["checks"]
    assert checks["picard:converged"] and checks["picard:agree:4"]


def test_out_directory_precedence(tmp_path, monkeypatch):
    monkeypatch.setenv("HSX2_OUT", str(tmp_path / "env"))
    main(["run", str(SCENARIOS / "zero.json")])
    assert (tmp_path / "env" / "zero" / "report.json").exists()
    main(["run", str(SCENARIOS / "zero.json"), "--out", str(tmp_path / "flag")])
    assert (tmp_path / "flag" / "zero" / "report.json").exists()
    monkeypatch.delenv("HSX2_OUT")
    monkeypatch.chdir(tmp_path)
    main(["run", str(SCENARIOS / "zero.json")])
    assert (tmp_path / cli.DEFAULT_OUT / "zero" / "report.json").exists()


def test_tol_flag_is_applied(tmp_path):
    obj = _load("a4")
    obj["expected_failures"] = []
    p = str(_write(tmp_path, obj))
    assert main(["run", p, "--out", str(tmp_path), "--allow-invalid-alpha", "--tol", "0.5"]) == EXIT_OK


# input errors

def test_schema_errors_carry_pointers():
    obj = {"name": "bad", "initial": {"eulerian": {"u": {"knots": [[0, "x"]]}}},
           "alpha": {"constant": 1.5}, "times": [1, -2]}
    errors = validate_scenario(obj)
    pointers = {e.split(":")[0] for e in errors}
    assert "/initial/eulerian/u/knots/0/1" in pointers
    assert "/alpha/constant" in pointers
    assert "/times/1" in pointers


def test_unsorted_times_rejected():
    obj = _load("zero")
    obj["times"] = [1.0, 0.5]
    assert validate_scenario(obj) == ["/times: must be sorted"]


def test_missing_field_reported(tmp_path, capsys):
    obj = _load("zero")
    del obj["alpha"]
    assert main(["run", str(_write(tmp_path, obj)), "--out", str(tmp_path)]) == EXIT_INPUT
    assert "'alpha' is a required property" in capsys.readouterr().err


def test_unreadable_file(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    assert main(["run", str(p), "--out", str(tmp_path)]) == EXIT_INPUT
    assert main(["run", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == EXIT_INPUT


def test_inadmissible_lagrangian_input(tmp_path):
    obj = _load("zero")
    obj["initial"] = {"lagrangian": {"xi": [0, 1], "y": [0, 1], "U": [0, 0.5], "H": [0, 1],
                                     "V": [0, 1], "r": [0]}}
    assert main(["run", str(_write(tmp_path, obj)), "--out", str(tmp_path)]) == EXIT_INPUT


# examples

@pytest.mark.parametrize("name", ["a1", "a2", "a3", "a4", "intro"])
def test_examples_pass(name, capsys):
    assert main(["example", name]) == EXIT_OK
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.count("ok  ") >= 3


def test_example_three_peaks_trace(capsys):
    main(["example", "a3"])
    out = capsys.readouterr().out
    assert "ok   distinct iterates" in out and "n=5" in out


def test_example_pair_table(capsys):
    main(["example", "a2"])
    out = capsys.readouterr().out
    assert "norm table t=1:" in out and "norm table t=3:" in out
    assert "y_sup    computed=0.2" in out


def test_example_report_written(tmp_path):
    assert main(["example", "a1", "--out", str(tmp_path)]) == EXIT_OK
    rep = json.loads((tmp_path / "example_a1" / "report.json").read_text())
    assert rep["ok"] and all(c["ok"] for c in rep["checks"])


def test_unknown_example_rejected():
    with pytest.raises(SystemExit):
        main(["example", "a9"])


# plot data

def test_characteristics_have_kink_at_breaking(tmp_path):
    result = run_scenario(load_scenario(_load("a1")))
    rows = _rows(export_plot_data(result, "characteristics", tmp_path / "c.csv"))
    labels = sorted({float(r["xi"]) for r in rows})
    assert labels == [-1.0, 1.0, 3.0]
    curve = [(float(r["t"]), float(r["y"])) for r in rows if float(r["xi"]) == 3.0]
    t = np.array([c[0] for c in curve])
    y = np.array([c[1] for c in curve])
    assert 2.0 in t
    # acceleration 1/2 before breaking, 3/10 after
    assert np.allclose(y, hat.y(np.array([3.0]), 0)[0] + np.where(
        t < 2, t * t / 4, 3 * t * t / 20 + 2 * t / 5 - 2 / 5), atol=1e-12)


def test_empty_time_list_gives_header_only(tmp_path):
    obj = _load("a1")
    obj["times"] = []
    obj["outputs"] = ["states"]
    result = run_scenario(load_scenario(obj))
    for kind in ("profile", "cdf", "characteristics"):
        lines = export_plot_data(result, kind, tmp_path / f"{kind}.csv").read_text().splitlines()
        assert len(lines) == 1


def test_metric_growth_columns(tmp_path):
    result = run_scenario(load_scenario(_load("a2")))
    rows = _rows(export_plot_data(result, "metric_growth", tmp_path / "m.csv"))
    assert list(rows[0]) == ["t", "dtilde", "C_dtilde0"]
    assert all(float(r["dtilde"]) <= float(r["C_dtilde0"]) for r in rows)


def test_unknown_plot_kind(tmp_path):
    result = run_scenario(load_scenario(_load("zero")))
    with pytest.raises(ValueError):
        export_plot_data(result, "histogram", tmp_path / "h.csv")


def test_console_script_exit_code(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "hsx2.cli", "run", str(SCENARIOS / "zero.json"),
                           "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == EXIT_OK and "all" in proc.stdout
