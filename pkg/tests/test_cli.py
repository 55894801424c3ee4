import json

import numpy as np
import pytest

from ktpi.cli import config_hash, fmt, main, read_csv
from ktpi.envs import default_plane_world
from ktpi.mdp import Region

PLANE = {
    "seed": 3,
    "world": {"type": "plane"},
    "sampler": {"strategy": "evenly_spaced", "counts": [6, 6]},
    "solver": {"lengthscale": 1.5, "lambda": 1.0},
    "eval": {"n_start_states": 20, "trials_per_state": 2, "max_steps": 60, "record_trajectories": 3},
    "output": {"value_counts": [20, 20], "policy_counts": [8, 8]},
}


def write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def run(*argv):
    return main([str(a) for a in argv])


def test_solve_writes_artifacts(tmp_path):
    cfg = write(tmp_path, PLANE)
    out = tmp_path / "solve"
    assert run("solve", "--config", cfg, "--out", out) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["converged"] and report["status"] == "converged"
    assert "iteration_seconds" not in report
    for name in ("value_grid.csv", "policy_field.csv", "support_states.csv", "solution.json",
                 "manifest.json", "timing.json", "plot.gp"):
        assert (out / name).exists()
    grid = read_csv(out / "value_grid.csv")
    assert list(grid[0]) == ["x", "y", "value"] and len(grid) == 400
    field = read_csv(out / "policy_field.csv")
    assert list(field[0]) == ["x", "y", "action", "dx", "dy"]
    support = read_csv(out / "support_states.csv")
    assert len(support) == 36
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config_sha256"] == config_hash(json.loads(open(cfg).read()) | {"seed": 3})


def test_value_grid_maximum_lies_in_goal(tmp_path):
    cfg = dict(PLANE, sampler={"strategy": "evenly_spaced", "counts": [10, 10]})
    out = tmp_path / "fig"
    assert run("solve", "--config", write(tmp_path, cfg), "--out", out) == 0
    rows = read_csv(out / "value_grid.csv")
    xy = np.array([[float(r["x"]), float(r["y"])] for r in rows])
    v = np.array([float(r["value"]) for r in rows])
    world = default_plane_world()
    assert world.classify_batch(xy[np.argmax(v)][None])[0] == Region.GOAL


def test_single_goal_config(tmp_path):
    cfg = {"world": {"type": "plane", "obstacles": [],
                     "goal": {"type": "rect", "xmin": 0, "ymin": 0, "xmax": 10, "ymax": 10}},
           "sampler": {"strategy": "evenly_spaced", "counts": [2, 2]},
           "solver": {"lengthscale": 1.0, "lambda": 0.5}}
    out = tmp_path / "goal"
    assert run("solve", "--config", write(tmp_path, cfg), "--out", out) == 0
    assert json.loads((out / "report.json").read_text())["converged"]
    values = {float(r["value"]) for r in read_csv(out / "value_grid.csv")}
    assert values == {1.0 / (1.0 - 0.9)}


def test_solve_and_eval_are_reproducible(tmp_path):
    cfg = write(tmp_path, PLANE)
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("solve", "--config", cfg, "--out", a) == 0
    assert run("solve", "--config", cfg, "--out", b, "--threads", "4") == 0
    for f in a.iterdir():
        if f.name != "timing.json":
            assert f.read_bytes() == (b / f.name).read_bytes(), f.name
    assert run("eval", "--config", cfg, "--out", a / "ev", "--solution", a) == 0
    assert run("eval", "--config", cfg, "--out", b / "ev", "--solution", b, "--threads", "4") == 0
    for f in (a / "ev").iterdir():
        assert f.read_bytes() == (b / "ev" / f.name).read_bytes(), f.name


def test_eval_outputs(tmp_path):
    cfg = write(tmp_path, PLANE)
    sol = tmp_path / "sol"
    assert run("solve", "--config", cfg, "--out", sol) == 0
    assert run("eval", "--config", cfg, "--out", tmp_path / "ev", "--solution", sol) == 0
    rows = read_csv(tmp_path / "ev" / "eval.csv")
    assert len(rows) == 40
    summary = json.loads((tmp_path / "ev" / "eval_summary.json").read_text())
    mean = np.mean([float(r["return"]) for r in rows])
    assert summary["average_return"] == pytest.approx(mean, rel=1e-12)
    traj = read_csv(tmp_path / "ev" / "trajectories.csv")
    assert {r["trajectory"] for r in traj} == {"0", "1", "2"}


def test_sweep_baselines_and_compare(tmp_path):
    cfg = dict(PLANE, solver={"lengthscales": [1.0, 2.0], "lambdas": [1.0]})
    path = write(tmp_path, cfg)
    assert run("sweep", "--config", path, "--out", tmp_path / "sw") == 0
    rows = read_csv(tmp_path / "sw" / "perf_matrix.csv")
    assert [r["lengthscale"] for r in rows] == ["1", "2"]
    assert set(rows[0]) >= {"lambda", "avg_return", "converged", "iterations", "solve_seconds"}
    path = write(tmp_path, PLANE, "plane.json")
    assert run("solve", "--config", path, "--out", tmp_path / "taylor") == 0
    assert run("eval", "--config", path, "--out", tmp_path / "taylor", "--solution", tmp_path / "taylor") == 0
    assert run("baseline", "--config", path, "--out", tmp_path / "grid", "--which", "grid") == 0
    assert run("baseline", "--config", path, "--out", tmp_path / "direct", "--which", "direct") == 0
    for d in ("grid", "direct"):
        assert (tmp_path / d / "eval.csv").exists() and (tmp_path / d / "value_grid.csv").exists()
    assert run("compare", "--out", tmp_path / "cmp", tmp_path / "taylor", tmp_path / "grid", tmp_path / "direct") == 0
    table = read_csv(tmp_path / "cmp" / "comparison.csv")
    assert [r["method"] for r in table] == ["taylor", "grid", "direct"]


@pytest.mark.parametrize("cfg, needle", [
    ({"world": {"type": "plane", "bogus": 1}}, "world"),
    ({"world": {"type": "plane"}, "solver": {"lamda": 1}}, "solver"),
    ({"world": {"type": "plane", "obstacles": [{"type": "rect", "xmin": 1, "ymin": 1, "xmax": 2}]}}, "world/obstacles/0"),
    ({"world": {"type": "moon"}}, "world/type"),
])
def test_config_errors_exit_2(tmp_path, capsys, cfg, needle):
    assert run("solve", "--config", write(tmp_path, cfg), "--out", tmp_path / "o") == 2
    assert needle in capsys.readouterr().err


def test_invalid_json_and_missing_solution(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run("solve", "--config", bad, "--out", tmp_path / "o") == 2
    assert run("eval", "--config", write(tmp_path, PLANE), "--out", tmp_path / "o") == 2
    assert "--solution" in capsys.readouterr().err


def test_io_errors_exit_4(tmp_path):
    assert run("solve", "--config", tmp_path / "missing.json", "--out", tmp_path / "o") == 4
    assert run("compare", "--out", tmp_path / "c", tmp_path / "nowhere") == 4


def test_solver_failure_exit_3(tmp_path):
    cfg = dict(PLANE, sampler={"strategy": "evenly_spaced", "counts": [10, 10]},
               solver={"lengthscale": 3.0, "lambda": 0.0})
    out = tmp_path / "ill"
    assert run("solve", "--config", write(tmp_path, cfg), "--out", out) == 3
    report = json.loads((out / "report.json").read_text())
    assert report["status"] == "failed" and "lambda" in report["error"]


def test_float_formatting_round_trips():
    for x in (0.1, 1 / 3, 1e-300, 123456789.123456789):
        assert float(fmt(x)) == x
