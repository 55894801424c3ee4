"""Command-line experiment driver.

``ktpi solve|sweep|eval|baseline|compare --config cfg.json --out DIR``

Every command writes its artifacts atomically into ``--out`` together with a
``manifest.json`` (config hash, seeds, library versions). Wall-clock timings
go to ``timing.json`` only, so all other files are byte-identical across
reruns and thread counts. The one exception is the ``solve_seconds`` column
of ``perf_matrix.csv``.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import platform
import sys
import tempfile
import time
from pathlib import Path

import jsonschema
import numpy as np
import scipy

from . import __version__
from .baselines import (
    DirectKernelSolution,
    GridSolution,
    direct_kernel_policy_iteration,
    discretize,
    grid_policy_iteration,
)
from .envs import world_from_dict
from .envs.base import open_uniform
from .evaluation import (
    THREADS_ENV,
    RolloutConfig,
    TaylorPolicy,
    average_return,
    hyperparameter_sweep,
    kernel_spec_for,
    simulate,
    trial_stream,
)
from .kernel import IllConditionedError
from .mdp import Region, ValueRepresentation, make_supporting_set
from .sampling import SamplerConfig, sample_states
from .solver import SolveOptions, SolverError, policy_iteration, values_at

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}


def _tagged(tag_values: dict) -> dict:
    """Object schema whose ``type`` key selects the allowed property set."""
    branches = []
    for tag, (props, required) in tag_values.items():
        branches.append({
            "if": {"properties": {"type": {"const": tag}}, "required": ["type"]},
            "then": {"properties": {"type": {"const": tag}, **props}, "required": ["type", *required],
                     "additionalProperties": False},
        })
    return {"type": "object", "required": ["type"], "properties": {"type": {"enum": list(tag_values)}},
            "allOf": branches}


_region = _tagged({
    "rect": ({"xmin": _num, "ymin": _num, "xmax": _num, "ymax": _num}, ["xmin", "ymin", "xmax", "ymax"]),
    "disc": ({"cx": _num, "cy": _num, "radius": _pos}, ["cx", "cy", "radius"]),
})
_bounds = {"type": "array", "items": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}}
_common_world = {
    "gamma": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
    "r_goal": _num,
    "r_obs": _num,
    "reward_samples": {"type": "integer", "minimum": 1},
    "reward_seed": {"type": "integer", "minimum": 0},
    "goal": _region,
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["world"],
    "properties": {
        "seed": {"type": "integer", "minimum": 0},
        "world": _tagged({
            "plane": ({"layout": {"type": "string"}, "obstacles": {"type": "array", "items": _region},
                       "bounds": _bounds, "radius": _pos, "n_actions": {"type": "integer", "minimum": 2},
                       "noise_std": {"type": "number", "minimum": 0}, **_common_world}, []),
            "terrain": ({"heightmap": {"type": "string"}, "heightmap_file": {"type": "string"},
                         "critical_angle_deg": {"type": "number", "exclusiveMinimum": 0, "maximum": 90},
                         "radius": _pos, "n_actions": {"type": "integer", "minimum": 2},
                         "noise_std": {"type": "number", "minimum": 0},
                         "trap_std": {"type": "number", "minimum": 0}, **_common_world}, []),
            "unicycle": ({"bounds": _bounds, "obstacles": {"type": "array", "items": _region},
                          "heightmap": {"type": "string"}, "heightmap_file": {"type": "string"},
                          "v_range": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2},
                          "omega_range": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2},
                          "n_v": {"type": "integer", "minimum": 2}, "n_omega": {"type": "integer", "minimum": 2},
                          "dt": _pos, "noise_mean": {"type": "array", "items": _num},
                          "noise_cov": {"type": "array", "items": {"type": "array", "items": _num}},
                          **_common_world}, []),
        }),
        "sampler": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "strategy": {"enum": list(SamplerConfig.STRATEGIES)},
                "counts": {"type": "array", "items": {"type": "integer", "minimum": 2}},
                "n": {"type": "integer", "minimum": 1},
                "pool_size": {"type": "integer", "minimum": 1},
                "weight_exponent": {"type": "number", "minimum": 0},
                "path": {"type": "array", "items": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}},
                "start_arclength": {"type": "number", "minimum": 0},
                "band_length": _pos,
                "band_width": _pos,
                "reject_obstacles": {"type": "boolean"},
            },
        },
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "method": {"enum": ["taylor", "direct"]},
                "lengthscale": {"oneOf": [_pos, {"type": "array", "items": _pos}]},
                "lambda": {"type": "number", "minimum": 0},
                "lengthscales": {"type": "array", "items": _pos, "minItems": 1},
                "lambdas": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
                "amplitude": _pos,
                "max_iterations": {"type": "integer", "minimum": 1},
                "gamma": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            },
        },
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "counts": {"type": "array", "items": {"type": "integer", "minimum": 2}},
                "mc_samples": {"type": "integer", "minimum": 1},
                "max_iterations": {"type": "integer", "minimum": 1},
            },
        },
        "eval": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_start_states": {"type": "integer", "minimum": 1},
                "trials_per_state": {"type": "integer", "minimum": 1},
                "max_steps": {"type": "integer", "minimum": 1},
                "record_trajectories": {"type": "integer", "minimum": 0},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "value_counts": {"type": "array", "items": {"type": "integer", "minimum": 2}},
                "policy_counts": {"type": "array", "items": {"type": "integer", "minimum": 2}},
            },
        },
    },
}


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- I/O helpers

def fmt(x) -> str:
    """Decimal text for CSV/JSON numbers: integers verbatim, floats with 17 significant digits."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else None
    return obj


def dumps(obj) -> str:
    """Canonical JSON (sorted keys, floats round-trip exactly)."""
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"


def atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# ---------------------------------------------------------------- config

def load_config(path, seed_override=None) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    validate_config(cfg)
    if seed_override is not None:
        cfg["seed"] = int(seed_override)
    cfg.setdefault("seed", 0)
    return cfg


def validate_config(cfg) -> None:
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    err = jsonschema.exceptions.best_match(validator.iter_errors(cfg))
    if err is None:
        return
    # for oneOf branches the deepest sub-error names the offending key
    while err.context:
        err = max(err.context, key=lambda e: len(e.absolute_path))
    path = "/".join(str(p) for p in err.absolute_path) or "<root>"
    raise ConfigError(f"config error at {path}: {err.message}")


def build_world(cfg):
    wcfg = dict(cfg["world"])
    if "gamma" in cfg.get("solver", {}):
        wcfg["gamma"] = cfg["solver"]["gamma"]
    try:
        return world_from_dict(wcfg)
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"world: {exc}") from exc


def build_states(cfg, world):
    sampler = dict(cfg.get("sampler", {}))
    sampler.setdefault("strategy", "evenly_spaced")
    if sampler["strategy"] == "evenly_spaced":
        sampler.setdefault("counts", [10] * world.dim)
    for key in ("counts", "path"):
        if key in sampler:
            sampler[key] = tuple(map(tuple, sampler[key])) if key == "path" else tuple(sampler[key])
    try:
        sc = SamplerConfig(seed=cfg["seed"], **sampler)
        return sample_states(sc, world).states
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"sampler: {exc}") from exc


def rollout_config(cfg) -> RolloutConfig:
    ev = dict(cfg.get("eval", {}))
    ev.pop("record_trajectories", None)
    return RolloutConfig(base_seed=cfg["seed"], **ev)


def solver_params(cfg):
    s = cfg.get("solver", {})
    return (s.get("lengthscale", 1.5), s.get("lambda", 1.0), s.get("amplitude", 1.0),
            s.get("max_iterations", 100), s.get("method", "taylor"))


def config_hash(cfg) -> str:
    canon = json.dumps(_jsonable(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def write_manifest(out: Path, command, cfg, extra=None):
    manifest = {
        "command": command,
        "config": cfg,
        "config_sha256": config_hash(cfg),
        "seeds": {"seed": cfg["seed"], "sampler": cfg["seed"], "rollout_base_seed": cfg["seed"],
                  "grid_mc_seed": cfg["seed"], "reward_seed": cfg["world"].get("reward_seed", 0)},
        "versions": {"ktpi": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
    }
    manifest.update(extra or {})
    atomic_write(out / "manifest.json", dumps(manifest))


# ---------------------------------------------------------------- artifacts

def _lattice(world, counts):
    from .sampling import evenly_spaced

    return evenly_spaced(world.problem.bounds, counts)


def write_solution_fields(out: Path, cfg, world, value_fn, policy):
    """value_grid.csv, policy_field.csv and the gnuplot script."""
    d = world.dim
    names = ["x", "y", "theta"][:d]
    opts = cfg.get("output", {})
    vc = opts.get("value_counts", [50, 50, 8][:d])
    pc = opts.get("policy_counts", [20, 20, 4][:d])
    if len(vc) != d or len(pc) != d:
        raise ConfigError(f"output counts need {d} entries")
    vs = _lattice(world, vc)
    # terminal points carry their fixed boundary values; free points use the expansion
    labels = world.classify_batch(vs)
    p = world.problem
    vals = np.where(labels == Region.GOAL, p.goal_value,
                    np.where(labels == Region.OBSTACLE, p.r_obs, value_fn(vs)))
    atomic_write(out / "value_grid.csv", csv_text(names + ["value"], np.column_stack([vs, vals]).tolist()))
    ps = _lattice(world, pc)
    free = world.classify_batch(ps) == Region.FREE
    ps = ps[free]
    acts = np.asarray(policy.act(ps), dtype=int) if ps.shape[0] else np.zeros(0, dtype=int)
    mu = world.batch_moments(ps, acts)[0][:, :2] if ps.shape[0] else np.zeros((0, 2))
    rows = [list(p) + [int(a), m[0], m[1]] for p, a, m in zip(ps, acts, mu)]
    atomic_write(out / "policy_field.csv", csv_text(names + ["action", "dx", "dy"], rows))
    atomic_write(out / "plot.gp", GNUPLOT_SCRIPT)


GNUPLOT_SCRIPT = """# gnuplot -p plot.gp
set datafile separator ','
set key off
set size ratio -1
set title 'value function and greedy policy'
plot 'value_grid.csv' every ::1 using 1:2:(column('value')) with image, \\
     'policy_field.csv' every ::1 using 1:2:(column('dx')):(column('dy')) with vectors lc 'black', \\
     'support_states.csv' every ::1 using 2:3 with points pt 7 ps 0.5 lc 'white'
"""


def write_support(out: Path, states, labels, values):
    d = states.shape[1]
    names = ["index"] + ["x", "y", "theta"][:d] + ["label", "value"]
    rows = [[i, *s, int(lab), v] for i, (s, lab, v) in enumerate(zip(states, labels, values))]
    atomic_write(out / "support_states.csv", csv_text(names, rows))


def write_eval(out: Path, cfg, world, policy, threads):
    """Average-return evaluation: eval.csv (one row per trajectory), summary and trajectories."""
    config = rollout_config(cfg)
    res = average_return(policy, world, config, threads=threads)
    d = world.dim
    names = ["start_index", "trial"] + ["x0", "y0", "theta0"][:d] + ["return", "outcome", "steps"]
    rows = []
    for i in range(config.n_start_states):
        for j in range(config.trials_per_state):
            rows.append([i, j, *res.starts[i], res.returns[i, j], int(res.outcomes[i, j]), int(res.steps[i, j])])
    atomic_write(out / "eval.csv", csv_text(names, rows))
    summary = {**res.summary(), "n_start_states": config.n_start_states,
               "trials_per_state": config.trials_per_state, "max_steps": config.max_steps}
    atomic_write(out / "eval_summary.json", dumps(summary))
    n_rec = min(cfg.get("eval", {}).get("record_trajectories", 10), config.n_start_states)
    trows = []
    gamma = world.problem.gamma
    for i in range(n_rec):
        noise = open_uniform(trial_stream(config, i, 0), (1, config.max_steps, world.noise_dim))
        r = simulate(policy, world, res.starts[i][None], noise, gamma, record=True)
        for k, s in enumerate(r.trajectories[0]):
            trows.append([i, k, *s])
    atomic_write(out / "trajectories.csv", csv_text(["trajectory", "step"] + ["x", "y", "theta"][:d], trows))
    return summary


def _report_dict(report, method, hyper, status):
    out = report.as_dict(timings=False) if report is not None else {}
    out.update({"method": method, "status": status, **hyper})
    return out


# ---------------------------------------------------------------- commands

def cmd_solve(cfg, out: Path, threads=None, method=None) -> int:
    world = build_world(cfg)
    states = build_states(cfg, world)
    ls, lam, amp, max_it, cfg_method = solver_params(cfg)
    method = method or cfg_method
    hyper = {"lengthscale": ls, "lambda": lam, "amplitude": amp, "n_support": int(states.shape[0])}
    spec = kernel_spec_for(world, ls, amp)
    t0 = time.perf_counter()
    try:
        supp = make_supporting_set(spec, states, world.problem, lam)
        options = SolveOptions(max_iterations=max_it)
        if method == "taylor":
            _, vr, report = policy_iteration(spec, supp, world, world.problem, options)
            policy = TaylorPolicy(spec, vr, world, world.problem.gamma)
        else:
            _, vr, report = direct_kernel_policy_iteration(spec, supp, world, options)
            policy = DirectKernelSolution(spec, vr, world)
    except (IllConditionedError, SolverError, np.linalg.LinAlgError) as exc:
        atomic_write(out / "report.json", dumps({**_report_dict(None, method, hyper, "failed"),
                                                 "error": str(exc)}))
        write_manifest(out, "solve", cfg)
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    elapsed = time.perf_counter() - t0
    status = "converged" if report.converged else ("cycle" if report.cycle_detected else "max_iterations")
    atomic_write(out / "report.json", dumps(_report_dict(report, method, hyper, status)))
    atomic_write(out / "timing.json", dumps({"solve_seconds": elapsed,
                                             "iteration_seconds": report.iteration_seconds}))
    write_support(out, supp.states, supp.labels, vr.values)
    solution = {"method": method, "config": cfg, "lengthscales": spec.lengthscales, "amplitude": amp,
                "lambda": lam, "states": supp.states, "values": vr.values, "alpha": vr.alpha}
    atomic_write(out / "solution.json", dumps(solution))
    write_solution_fields(out, cfg, world, lambda s: values_at(spec, vr, s), policy)
    write_manifest(out, "solve", cfg)
    return EXIT_OK


def load_solution(sol_dir: Path, world):
    try:
        sol = json.loads((Path(sol_dir) / "solution.json").read_text())
    except FileNotFoundError as exc:
        raise OSError(f"no solution.json in {sol_dir}") from exc
    from .kernel import KernelSpec

    spec = KernelSpec(sol["amplitude"], sol["lengthscales"], getattr(world, "wrap_mask", None))
    supp = make_supporting_set(spec, np.array(sol["states"]), world.problem, sol["lambda"])
    vr = ValueRepresentation(np.array(sol["values"]), np.array(sol["alpha"]), supp)
    if sol["method"] == "direct":
        return DirectKernelSolution(spec, vr, world), sol
    return TaylorPolicy(spec, vr, world, world.problem.gamma), sol


def cmd_eval(cfg, out: Path, solution_dir, threads=None) -> int:
    if solution_dir is None:
        raise ConfigError("eval needs --solution DIR (the output of a solve run)")
    world = build_world(cfg)
    policy, sol = load_solution(Path(solution_dir), world)
    summary = write_eval(out, cfg, world, policy, threads)
    write_manifest(out, "eval", cfg, {"solution_config_sha256": config_hash(sol["config"])})
    print(f"average return {summary['average_return']:.6f}  goal rate {summary['goal_rate']:.4f}")
    return EXIT_OK


def cmd_sweep(cfg, out: Path, threads=None) -> int:
    world = build_world(cfg)
    states = build_states(cfg, world)
    s = cfg.get("solver", {})
    grid = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0]
    lengthscales = s.get("lengthscales", grid)
    lambdas = s.get("lambdas", grid)
    _, _, amp, max_it, method = solver_params(cfg)
    pm = hyperparameter_sweep(world, states, lengthscales, lambdas, rollout_config(cfg), method=method,
                              amplitude=amp, max_iterations=max_it, threads=threads)
    header = ["lengthscale", "lambda", "avg_return", "goal_rate", "converged", "iterations", "status",
              "solve_seconds"]
    rows = []
    for row, gr in zip(pm.rows(), pm.goal_rates.ravel()):
        rows.append([row["lengthscale"], row["lambda"], row["avg_return"], gr, row["converged"],
                     row["iterations"], row["status"], row["solve_seconds"]])
    atomic_write(out / "perf_matrix.csv", csv_text(header, rows))
    i, j = pm.best()
    write_manifest(out, "sweep", cfg, {"best": {"lengthscale": lengthscales[i], "lambda": lambdas[j],
                                                "avg_return": pm.best_return}})
    return EXIT_OK


def cmd_baseline(cfg, out: Path, which, threads=None) -> int:
    if which == "direct":
        code = cmd_solve(cfg, out, threads, method="direct")
        if code != EXIT_OK:
            return code
        world = build_world(cfg)
        policy, _ = load_solution(out, world)
        write_eval(out, cfg, world, policy, threads)
        write_manifest(out, "baseline-direct", cfg)
        return EXIT_OK
    world = build_world(cfg)
    g = cfg.get("grid", {})
    counts = g.get("counts", cfg.get("sampler", {}).get("counts", [10] * world.dim))
    if len(counts) != world.dim:
        raise ConfigError(f"grid counts need {world.dim} entries")
    t0 = time.perf_counter()
    mdp = discretize(world, counts, g.get("mc_samples", 1000), cfg["seed"])
    policy, values, iterations = grid_policy_iteration(mdp, g.get("max_iterations", 1000))
    elapsed = time.perf_counter() - t0
    sol = GridSolution(mdp, policy, values)
    n = mdp.n_cells
    converged = iterations < g.get("max_iterations", 1000)
    report = {"method": "grid", "status": "converged" if converged else "max_iterations",
              "converged": converged, "iterations": iterations, "counts": list(counts),
              "mc_samples": g.get("mc_samples", 1000), "n_support": n}
    atomic_write(out / "report.json", dumps(report))
    atomic_write(out / "timing.json", dumps({"solve_seconds": elapsed,
                                             "iteration_seconds": [elapsed / max(iterations, 1)] * iterations}))
    write_support(out, mdp.centers, mdp.labels[:n], values[:n])
    write_solution_fields(out, cfg, world, sol.value, sol)
    write_eval(out, cfg, world, sol, threads)
    write_manifest(out, "baseline-grid", cfg)
    return EXIT_OK


def cmd_compare(dirs, out: Path) -> int:
    header = ["run", "method", "avg_return", "goal_rate", "iterations", "converged", "mean_iteration_seconds"]
    rows = []
    for d in dirs:
        d = Path(d)
        try:
            report = json.loads((d / "report.json").read_text())
        except FileNotFoundError as exc:
            raise OSError(f"{d}: missing report.json") from exc
        summ_path = d / "eval_summary.json"
        summary = json.loads(summ_path.read_text()) if summ_path.exists() else {}
        timing_path = d / "timing.json"
        its = json.loads(timing_path.read_text()).get("iteration_seconds", []) if timing_path.exists() else []
        rows.append([d.name, report.get("method", ""),
                     summary.get("average_return", float("nan")), summary.get("goal_rate", float("nan")),
                     report.get("iterations", 0), bool(report.get("converged", False)),
                     float(np.mean(its)) if its else float("nan")])
    atomic_write(out / "comparison.csv", csv_text(header, rows))
    return EXIT_OK


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ktpi", description="Kernel Taylor-based policy iteration experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", required=True, help="JSON experiment config")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--seed", type=int, default=None, help="overrides the config seed")
        sp.add_argument("--threads", type=int, default=None,
                        help=f"rollout worker threads (default ${THREADS_ENV} or 1)")

    common(sub.add_parser("solve", help="solve one configuration"))
    common(sub.add_parser("sweep", help="lengthscale x lambda sweep"))
    ev = sub.add_parser("eval", help="average-return evaluation of a solved run")
    common(ev)
    ev.add_argument("--solution", help="directory written by 'solve'")
    bl = sub.add_parser("baseline", help="grid PI or direct kernel PI, solved and evaluated")
    common(bl)
    bl.add_argument("--which", choices=["grid", "direct"], default="grid")
    cp = sub.add_parser("compare", help="tabulate several run directories")
    common(cp, config=False)
    cp.add_argument("dirs", nargs="+")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "compare":
            return cmd_compare(args.dirs, out)
        cfg = load_config(args.config, args.seed)
        if args.command == "solve":
            return cmd_solve(cfg, out, args.threads)
        if args.command == "sweep":
            return cmd_sweep(cfg, out, args.threads)
        if args.command == "eval":
            return cmd_eval(cfg, out, args.solution, args.threads)
        return cmd_baseline(cfg, out, args.which, args.threads)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    except (IllConditionedError, SolverError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
