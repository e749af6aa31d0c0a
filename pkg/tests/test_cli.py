from __future__ import annotations

import csv
import json
import subprocess
import sys

import pytest

from exproj.analysis import check_feasibility
from exproj.cli import main
from exproj.config import default_scenario
from exproj.export import TRAJECTORY_COLUMNS, read_trajectory_csv, write_trajectory_csv


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def solved(tmp_path_factory):
    out = tmp_path_factory.mktemp("solve")
    code = main(["solve", "--solver", "exproj", "--tf", "46.96", "--out", str(out)])
    return code, out


def test_solve_writes_artifacts(solved):
    code, out = solved
    assert code == 0
    traj = rows(out / "exproj_trajectory.csv")
    assert len(traj) == 48
    assert tuple(traj[0]) == TRAJECTORY_COLUMNS
    result = json.loads((out / "exproj_result.json").read_text())
    assert result["fuel"] == pytest.approx(200.66, rel=0.02)
    assert result["solver"] == "exproj" and result["converged"] is True
    report = json.loads((out / "exproj_report.json").read_text())
    assert report["feasible"] is True
    for key in ("max_upper_thrust_violation", "max_lower_thrust_violation", "max_pointing_violation",
                "terminal_position_error", "terminal_velocity_error", "mass_floor_violation",
                "dynamics_defect"):
        assert report[key] >= 0.0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["subcommand"] == "solve"


def test_csv_round_trip_gives_identical_report(solved, tmp_path):
    _, out = solved
    cfg = default_scenario()
    traj = read_trajectory_csv(out / "exproj_trajectory.csv")
    again = write_trajectory_csv(traj, tmp_path / "copy.csv")
    assert again.read_text() == (out / "exproj_trajectory.csv").read_text()
    assert check_feasibility(read_trajectory_csv(again), cfg) == check_feasibility(traj, cfg)


def test_check_subcommand(solved, tmp_path, capsys):
    _, out = solved
    assert main(["check", str(out / "exproj_trajectory.csv"), "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    original = json.loads((out / "exproj_report.json").read_text())
    assert report == original
    assert "feasible: True" in capsys.readouterr().out


def test_check_flags_tight_tolerance(solved):
    _, out = solved
    assert main(["check", str(out / "exproj_trajectory.csv"), "--tol-position", "1e-9"]) == 2


def test_missing_scenario_file(tmp_path, capsys):
    assert main(["solve", "--scenario", str(tmp_path / "nope.cfg")]) == 1
    assert "not found" in capsys.readouterr().err


def test_missing_trajectory_file(tmp_path):
    assert main(["check", str(tmp_path / "nope.csv")]) == 1


def test_bad_scenario_content(tmp_path, capsys):
    path = tmp_path / "bad.cfg"
    path.write_text("r_init = 1, 2, 3\n")
    assert main(["solve", "--scenario", str(path)]) == 1
    assert "missing required key" in capsys.readouterr().err


def test_sweep_rejects_inverted_bracket(capsys):
    assert main(["sweep", "--t-lo", "50", "--t-hi", "40"]) == 1
    assert "usage error" in capsys.readouterr().err


def test_unknown_subcommand():
    assert main(["fly"]) == 1


def test_not_converged_exit_code():
    assert main(["solve", "--max-iters", "10"]) == 3


def test_compare_outputs(tmp_path, capsys):
    code = main(["compare", "--out", str(tmp_path)])
    assert code == 0
    text = capsys.readouterr().out
    assert "fuel [kg]" in text and "r(tf) [m]" in text and "v(tf) [m/s]" in text
    cmp = json.loads((tmp_path / "comparison.json").read_text())
    assert cmp["a"]["solver"] == "exproj" and cmp["b"]["solver"] == "lcvx"
    assert cmp["fuel_delta"] < 0.0
    table = rows(tmp_path / "comparison.csv")
    assert [r["solver"] for r in table] == ["exproj", "lcvx"]
    assert (tmp_path / "lcvx_trajectory.csv").exists()


def test_lcvx_short_flight_is_flagged_infeasible():
    assert main(["solve", "--solver", "lcvx", "--tf", "41.8"]) == 2


@pytest.mark.slow
def test_sweep_short_regime_flags_every_lcvx_row(tmp_path):
    main(["sweep", "--t-lo", "41", "--t-hi", "42", "--solver", "lcvx", "--out", str(tmp_path)])
    table = rows(tmp_path / "sweep.csv")
    assert [float(r["tf"]) for r in table] == [41.0, 42.0]
    assert all(r["feasible"] == "False" for r in table)


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "exproj", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "sweep" in out.stdout
