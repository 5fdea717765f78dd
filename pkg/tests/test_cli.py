import csv
import json
import shutil
import subprocess
import sys

import numpy as np
import pytest

from sosadp.bellman import ValueApprox
from sosadp.cli import EXIT_CHECK, EXIT_OK, EXIT_SDP, EXIT_USAGE, main
from sosadp.sdpa import parse_sdpa


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], float)


def test_fit_writes_artifact_and_report(tmp_path, capsys):
    code, out, _ = run(capsys, "fit", "--problem", "example_1d", "--degree", "2", "--out", str(tmp_path))
    assert code == EXIT_OK
    rep = json.loads(out)
    assert rep["status"] == "optimal" and rep["degree"] == 2
    v = ValueApprox.from_json((tmp_path / "value.json").read_text())
    assert v.degree == 2 and v.objective_value == rep["objective"]
    assert json.loads((tmp_path / "report.json").read_text()) == rep


def test_odd_degree_is_a_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["fit", "--problem", "example_1d", "--degree", "3"])
    assert exc.value.code == EXIT_USAGE
    assert "even" in capsys.readouterr().err


def test_lqg_fit_matches_riccati(tmp_path, capsys, lqg_riccati):
    code, _, _ = run(capsys, "fit", "--problem", "scalar_lqg", "--degree", "2", "--out", str(tmp_path))
    assert code == EXIT_OK
    v = ValueApprox.from_json((tmp_path / "value.json").read_text())
    P = lqg_riccati.P[0, 0]
    assert abs(v.coefficient((2,)) - P) / P <= 1e-4


def test_unknown_problem_and_missing_problem(capsys):
    assert run(capsys, "fit", "--problem", "pendulum")[0] == EXIT_USAGE
    assert run(capsys, "fit")[0] == EXIT_USAGE


def test_config_parse_error_reports_position(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("problem = example_1d\ndegree = 5\n")
    code, _, err = run(capsys, "fit", "--config", str(cfg))
    assert code == EXIT_USAGE
    assert "line 2, column 10" in err


def test_sdp_failure_exit_code(tmp_path, capsys):
    cfg = tmp_path / "short.cfg"
    cfg.write_text("problem = example_1d\ndegree = 4\nmax_iter = 2\n")
    code, _, err = run(capsys, "fit", "--config", str(cfg))
    assert code == EXIT_SDP
    assert json.loads(err)["status"] == "max_iter"


def test_verify_passes_and_detects_corruption(tmp_path, capsys):
    run(capsys, "fit", "--problem", "example_1d", "--degree", "4", "--out", str(tmp_path))
    art = tmp_path / "value.json"
    code, out, _ = run(capsys, "verify", "--problem", "example_1d", "--value", str(art))
    assert code == EXIT_OK and json.loads(out)["passed"]
    v = ValueApprox.from_json(art.read_text()).shifted(50.0)
    bad = tmp_path / "bad.json"
    bad.write_text(v.to_json())
    code, out, _ = run(capsys, "verify", "--problem", "example_1d", "--value", str(bad))
    assert code == EXIT_CHECK and not json.loads(out)["passed"]


def test_verify_rejects_dimension_mismatch(tmp_path, capsys):
    run(capsys, "fit", "--problem", "example_1d", "--degree", "2", "--out", str(tmp_path))
    code, _, _ = run(capsys, "verify", "--problem", "helicopter10", "--value", str(tmp_path / "value.json"))
    assert code == EXIT_USAGE


def test_family_csv_shape_and_dominance(tmp_path, capsys):
    code, out, _ = run(capsys, "family", "--problem", "example_1d", "--weight", "uniform", "--weight", "401 - x1^2",
                       "--degree", "2", "--degree", "4", "--out", str(tmp_path))
    assert code == EXIT_OK
    header, data = read_csv(tmp_path / "family.csv")
    assert data.shape == (401, 5)
    assert header == ["x", "deg2[uniform]", "deg2[401 - x1^2]", "deg4[uniform]", "deg4[401 - x1^2]"]
    band = np.abs(data[:, 0]) >= 18
    for k in (1, 2):
        assert np.all(data[band, k + 2] >= data[band, k] - 1e-6)


def test_family_rejects_multistate(capsys):
    assert run(capsys, "family", "--problem", "helicopter10")[0] == EXIT_USAGE


def test_oracle_with_zero_discount(tmp_path, capsys):
    code, out, _ = run(capsys, "oracle", "--problem", "example_1d", "--discount", "0", "--points", "201",
                       "--out", str(tmp_path))
    assert code == EXIT_OK
    _, data = read_csv(tmp_path / "oracle.csv")
    np.testing.assert_allclose(data[:, 1], data[:, 0] ** 2, atol=1e-10)


def test_simulate_reports_bound(tmp_path, capsys):
    code, out, _ = run(capsys, "simulate", "--problem", "example_1d", "--degree", "2", "--x0", "10",
                       "--rollouts", "100", "--out", str(tmp_path))
    rep = json.loads(out)
    assert code == EXIT_OK
    assert rep["bound_value"] <= rep["mean_cost"] + 3 * rep["stderr"] + rep["truncation_bound"]
    header, data = read_csv(tmp_path / "trajectory.csv")
    assert header == ["t", "x1", "u1", "l"] and len(data) == 688


def test_simulate_scenario_requires_helicopter(capsys):
    assert run(capsys, "simulate", "--problem", "example_1d", "--scenario", "hover")[0] == EXIT_USAGE


def test_export_sdpa_round_trip(tmp_path, capsys):
    code, out, _ = run(capsys, "export-sdpa", "--problem", "example_1d", "--degree", "4", "--out", str(tmp_path))
    assert code == EXIT_OK
    path = tmp_path / "example_1d_d4.dat-s"
    prob = parse_sdpa(path.read_text())
    assert prob.m == json.loads(out)["constraints"]


@pytest.mark.skipif(shutil.which("sosadp") is None, reason="console script not installed")
def test_console_script_help():
    res = subprocess.run(["sosadp", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "export-sdpa" in res.stdout


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "sosadp.cli", "fit", "--problem", "example_1d", "--degree", "3"],
                         capture_output=True, text=True)
    assert res.returncode == EXIT_USAGE
