import csv
import json
from pathlib import Path

import numpy as np
import pytest

from mmdi import InclusionProblem, LyapunovPair, NormalCone, IntervalProduct, solve
from mmdi.cli import emit_trajectory, main
from mmdi.config import build_plan, parse_config
from mmdi.errors import ConfigError

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_builtin_example_1_default_run(tmp_path):
    assert main(["run", "--scenario", "builtin-example-1", "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "trajectory.csv")
    assert rows[0] == ["t", "x_1", "x_2", "x_3", "speed", "V", "W", "lyap_composite"]
    assert len(rows) == 2001 + 1
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["decay"]["pass"] and rep["exit_code"] == 0


def test_example_2_refine_gives_gap_rows(tmp_path):
    code = main(["run", "--scenario", "example-2", "--h", "0.01", "--refine", "4", "--out", str(tmp_path)])
    assert code == 0
    rep = json.loads((tmp_path / "report.json").read_text())
    assert len(rep["convergence"]["rows"]) == 3
    comp = np.array([float(r[-1]) for r in _rows(tmp_path / "trajectory.csv")[1:]])
    assert np.all(np.diff(comp) <= rep["decay"]["slack"])


def test_inadmissible_sweeping_start_is_input_error(tmp_path, capsys):
    cfg = tmp_path / "bad.toml"
    cfg.write_text('[problem]\nkind = "sweeping"\nx0 = [3.0]\n[solver]\nh = 0.01\n'
                   '[set]\nkind = "interval"\nlo = [-1.0]\nhi = [1.0]\n')
    assert main(["run", str(cfg), "--out", str(tmp_path)]) == 1
    assert "admissible" in capsys.readouterr().err
    assert not (tmp_path / "report.json").exists()


@pytest.mark.parametrize("text, key", [
    ("[solver]\nhh = 1\n", "solver.hh"),
    ("[bogus]\n", "bogus"),
    ('[problem]\nkind = "generic"\nx0 = [1.0]\n[solver]\nh = "a"\n', "solver.h"),
    ('[problem]\nkind = "warp"\n', "problem.kind"),
    ('[problem]\nkind = "sweeping"\nx0 = [0.0]\n[solver]\nh = 0.1\n', "set.kind"),
    ('[problem]\nkind = "generic"\nx0 = [0.0, 1.0]\n[solver]\nh = 0.1\n[perturbation]\nmatrix = [[1.0]]\n',
     "perturbation.matrix"),
])
def test_schema_errors_name_the_key(tmp_path, capsys, text, key):
    cfg = tmp_path / "c.toml"
    cfg.write_text(text)
    assert main(["run", str(cfg), "--out", str(tmp_path)]) == 1
    assert capsys.readouterr().err.startswith(f"error: {key}")


def test_missing_config_file(capsys):
    assert main(["run", "/nonexistent/x.toml"]) == 1


def test_criterion_failure_exit_code(tmp_path):
    cfg = tmp_path / "grow.toml"
    cfg.write_text('[problem]\nkind = "generic"\nx0 = [1.0]\nT = 1.0\n[solver]\nh = 0.01\n'
                   '[perturbation]\nmatrix = [[1.0]]\n[lyapunov]\nkind = "quadratic"\n')
    assert main(["run", str(cfg), "--out", str(tmp_path)]) == 2
    assert json.loads((tmp_path / "report.json").read_text())["verdict"] == "fail"


def test_solver_failure_exit_code(tmp_path, monkeypatch, capsys):
    import mmdi.cli
    from mmdi.errors import SolverError

    def broken(*args, **kwargs):
        raise SolverError("step 3 failed: resolvent did not converge", last_index=3, trajectory=None)

    monkeypatch.setattr(mmdi.cli, "solve", broken)
    assert main(["run", "--scenario", "example-1", "--out", str(tmp_path)]) == 3
    assert "solver failure" in capsys.readouterr().err


@pytest.mark.parametrize("name", ["sweeping_interval", "lure_relay", "ball_generic"])
def test_shipped_scenarios_pass(tmp_path, name):
    assert main(["run", str(SCENARIOS / f"{name}.toml"), "--out", str(tmp_path)]) == 0
    assert (tmp_path / "trajectory.csv").exists()


def test_lure_report_has_assumptions(tmp_path):
    main(["run", str(SCENARIOS / "lure_relay.toml"), "--out", str(tmp_path)])
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["assumptions"]["verdicts"]["D_psd"] == "pass"


def test_deterministic_output(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        main(["run", "--scenario", "example-2", "--seed", "7", "--out", str(out)])
    assert (a / "trajectory.csv").read_bytes() == (b / "trajectory.csv").read_bytes()


def test_emit_trajectory_row_count_and_constant_columns(tmp_path):
    prob = InclusionProblem(lambda t, x: np.zeros(2), NormalCone(IntervalProduct([-1, -1], [1, 1])), c_f=1.0)
    tr = solve(prob, 0.0, [0.25, -0.5], 0.1)
    path = emit_trajectory(tr, None, tmp_path / "t.csv")
    rows = _rows(path)
    assert rows[0] == ["t", "x_1", "x_2", "speed"]
    assert len(rows) - 1 == tr.times.size
    assert {r[1] for r in rows[1:]} == {"0.25"} and {r[2] for r in rows[1:]} == {"-0.5"}


def test_emit_trajectory_full_precision(tmp_path):
    prob = InclusionProblem(lambda t, x: np.array([1.0 / 3.0]), NormalCone(IntervalProduct([-9], [9])), c_f=1.0)
    tr = solve(prob, 0.0, [0.0], 0.1)
    pair = LyapunovPair(lambda t, x: float(x[0]))
    rows = _rows(emit_trajectory(tr, pair, tmp_path / "t.csv"))
    assert float(rows[-1][1]) == tr.states[-1, 0]
    assert rows[-1][-1] == repr(float(tr.states[-1, 0]))


def test_scenarios_listing(capsys):
    assert main(["scenarios"]) == 0
    assert capsys.readouterr().out.split() == ["builtin-example-1", "builtin-example-2"]


def test_build_plan_overrides():
    plan = build_plan(parse_config('[solver]\nh = 0.5\nrefine = 3\n'), scenario="example-2", h=0.01)
    assert plan.h_list == [0.01, 0.005, 0.0025]
    with pytest.raises(ConfigError, match="solver.h_list"):
        build_plan(parse_config('[problem]\nkind = "builtin-example-2"\n[solver]\nh_list = [0.1, 0.2]\n'))
