import csv
import json

import pytest

from scaled_polarity import suites
from scaled_polarity.cli import EXIT_CONFIG, EXIT_FAILED, EXIT_OK, main
from scaled_polarity.config import ExperimentConfig


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for key in ("CDL_SUITE", "CDL_N", "CDL_ALPHA", "CDL_SEED", "CDL_OUT", "CDL_GRID_H",
                "CDL_GRID_RANGE", "CDL_WORKERS", "CDL_LOG_LEVEL"):
        monkeypatch.delenv(key, raising=False)


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_rho_table_suite(tmp_path, capsys):
    assert main(["rho-table", "--n", "1..4", "--out", str(tmp_path)]) == EXIT_OK
    printed = capsys.readouterr().out.split()
    assert printed == [str(tmp_path / "rho-table.csv"), str(tmp_path / "rho-table.json")]
    rows = _rows(tmp_path / "rho-table.csv")
    assert [r["n"] for r in rows] == ["1", "2", "3", "4"]
    assert float(rows[0]["rho"]) == pytest.approx(0.1718, abs=2e-3)
    assert all(r["ok"] == "true" for r in rows)
    report = json.loads((tmp_path / "rho-table.json").read_text())
    assert report["passed"] is True
    assert report["config"]["n"] == [1, 2, 3, 4]


def test_transforms_suite_rows(tmp_path):
    args = ["transforms", "--n", "1,2", "--alpha", "0.5,2", "--samples", "3", "--out", str(tmp_path)]
    assert main(args) in (EXIT_OK, EXIT_FAILED)
    rows = _rows(tmp_path / "transforms.csv")
    assert {r["check"] for r in rows} == {"involution", "composition", "norm_ratio", "ratio_product"}
    exact = [r for r in rows if r["check"] in ("norm_ratio", "ratio_product")]
    assert exact and all(r["ok"] == "true" for r in exact)
    assert {"n", "alpha", "seed", "tolerance"} <= set(rows[0])


def test_mahler_suite_passes(tmp_path):
    assert main(["mahler", "--n", "1,2", "--samples", "2", "--out", str(tmp_path)]) == EXIT_OK


def test_failed_checks_exit_with_one(tmp_path, monkeypatch):
    def broken(config, task):
        return [suites._check(config, "rho", task[0], None, "forced", 1.0, 0.0, False)]

    table = dict(suites._SUITES)
    table["rho-table"] = (table["rho-table"][0], broken, suites._default_summary)
    monkeypatch.setattr(suites, "_SUITES", table)
    assert main(["rho-table", "--n", "1", "--out", str(tmp_path)]) == EXIT_FAILED


def test_config_errors_exit_with_two(tmp_path, capsys):
    assert main(["everything"]) == EXIT_CONFIG
    assert main(["rho-table", "--n", "x"]) == EXIT_CONFIG
    assert main(["rho-table", "--config", str(tmp_path / "missing.json")]) == EXIT_CONFIG
    assert "cdl:" in capsys.readouterr().err


def test_precedence_env_then_json_then_flags(tmp_path, monkeypatch):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": [2], "seed": 11}))
    monkeypatch.setenv("CDL_SEED", "3")
    monkeypatch.setenv("CDL_OUT", str(tmp_path / "env-out"))
    assert main(["rho-table", "--config", str(cfg), "--seed", "12"]) == EXIT_OK
    report = json.loads((tmp_path / "env-out" / "rho-table.json").read_text())
    assert report["config"]["n"] == [2]
    assert report["config"]["seed"] == 12


def test_export_h_curve(tmp_path):
    target = tmp_path / "h.csv"
    args = ["export", "h-curve", "--from", str(tmp_path), "--n", "1", "--alpha", "2", "--out", str(target)]
    assert main(args) == EXIT_OK
    rows = _rows(target)
    assert len(rows) == 400
    assert set(rows[0]) == {"n", "alpha", "z", "h", "dh"}


def test_export_needs_suite_output(tmp_path):
    assert main(["export", "lambda-vs-alpha", "--from", str(tmp_path)]) == EXIT_CONFIG
    assert main(["export", "gamma-vs-n", "--from", str(tmp_path)]) == EXIT_CONFIG


def test_session_tracks_runs(tmp_path):
    session = suites.ExperimentSession(ExperimentConfig(out=str(tmp_path)))
    outcome = session.run(suite="rho-table", n=[1])
    assert outcome.passed
    status = session.status()
    assert status["runs"] == 1
    assert status["last"]["suite"] == "rho-table"


def test_crosscheck_suite_in_one_and_two_dimensions(tmp_path):
    assert main(["crosscheck", "--n", "1,2", "--out", str(tmp_path)]) == EXIT_OK
    rows = _rows(tmp_path / "crosscheck.csv")
    assert {r["n"] for r in rows} == {"1", "2"}
    assert all(r["ok"] == "true" for r in rows)
    planar = [r for r in rows if r["n"] == "2" and r["check"] in ("legendre", "polarity", "gauge_j")]
    assert len(planar) == 9
    assert all(float(r["sup_tol"]) == 2.0 / 64 for r in planar)
    assert all(r["input_lattice"] == "[-2,2]^2 h=0.015625" for r in planar)
    integrals = [r for r in rows if r["check"] == "integral"]
    assert all(float(r["rel_tol"]) == 1e-3 for r in integrals)


def _duality_row(check, n, measured, ratio, lo, hi):
    return {"check": check, "n": n, "alpha": 1.0, "ok": True, "measured": measured, "ratio": ratio,
            "corridor": ratio ** (1.0 / n), "ratio_lo": lo, "ratio_hi": hi}


def test_duality_summary_keeps_volume_bounds_out_of_the_corridor():
    rows = [
        _duality_row("pair", 1, True, 1.5, 1.5, 1.5),
        _duality_row("pair", 1, True, 2.0, 2.0, 2.0),
        _duality_row("pair", 3, False, float("nan"), 0.1, 30.0),
        _duality_row("control", 1, True, 2.0, 2.0, 2.0),
        _duality_row("control", 2, True, 3.0, 3.0, 3.0),
        _duality_row("control", 3, False, float("nan"), 0.5, 12.0),
    ]
    summary, failures = suites._duality_summary(rows)
    assert failures == []
    assert summary["n=1"] == {"c": 1.5, "C": 2.0, "source": "lp"}
    assert "c" not in summary["n=3"]
    assert summary["n=3"]["volume_bounds"]["C_upper"] == pytest.approx(30.0 ** (1.0 / 3))
    assert summary["control_ratios"] == [2.0, 3.0]
    assert summary["control_bounds"] == {3: [0.5, 12.0]}


def test_duality_summary_rejects_bounds_against_the_drift():
    rows = [
        _duality_row("control", 1, True, 2.0, 2.0, 2.0),
        _duality_row("control", 2, True, 3.0, 3.0, 3.0),
        _duality_row("control", 3, False, float("nan"), 0.5, 2.5),
    ]
    _, failures = suites._duality_summary(rows)
    assert any("contradict" in f for f in failures)


def test_duality_suite_measures_ratios_with_the_lp(tmp_path):
    assert main(["duality", "--n", "1", "--out", str(tmp_path)]) == EXIT_OK
    rows = _rows(tmp_path / "duality.csv")
    pairs = [r for r in rows if r["check"] == "pair"]
    assert pairs and all(r["measured"] == "true" and r["source"] == "lp" for r in pairs)
    control = {r["n"]: r for r in rows if r["check"] == "control"}
    assert control["3"]["measured"] == "false"
    assert control["3"]["ratio"] == "nan"


def test_exact_jl_witnesses_cover_a_grid_of_capped_norms():
    rows = suites._witness_rows(ExperimentConfig(), 2, 8.0, 0.5)
    witnesses, sweep = rows[:-1], rows[-1]
    assert len(witnesses) == len(suites.WITNESS_R) * len(suites.WITNESS_T0)
    assert all(r["ok"] and r["value"] < 0.5 for r in witnesses)
    assert sweep["check"] == "witness_sweep"
    assert sweep["item"] == "r in [0.0, 0.25, 0.5, 0.75, 0.9], t0 in [0.25, 0.5, 1.0, 2.0, 4.0]"
    assert sweep["ok"]
    assert sweep["value"] == pytest.approx(min(0.5 - r["value"] for r in witnesses))
    assert sweep["value"] > 0
