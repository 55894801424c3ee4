"""Acceptance criteria, one test per criterion.

Each test records a ``PASS``/``FAIL`` line that is printed in the pytest
terminal summary (and directly when this file is run as a script).
The tolerances are the ones the criteria state; nothing here is tuned per run.
"""

import itertools
import json
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import TableModel, free_problem, moment_zscores, random_pairs  # noqa: E402
from ktpi.baselines import (  # noqa: E402
    GridSolution,
    discretize,
    gaussian_expected_kernel,
    grid_policy_iteration,
)
from ktpi.cli import main as cli_main  # noqa: E402
from ktpi.envs import (  # noqa: E402
    UnicycleWorld,
    default_plane_world,
    default_terrain_world,
    load_bundled_heightmap,
)
from ktpi.evaluation import RolloutConfig, average_return, hyperparameter_sweep, solve  # noqa: E402
from ktpi.kernel import KernelSpec, kernel_diffusion, kernel_eval, kernel_grad, kernel_matrix  # noqa: E402
from ktpi.mdp import ProblemDefinition, Region, make_supporting_set  # noqa: E402
from ktpi.sampling import SamplerConfig, evenly_spaced, sample_states  # noqa: E402
from ktpi.solver import policy_evaluation, policy_iteration  # noqa: E402

RESULTS = []
SWEEP_AXIS = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0]


def record(tag, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {tag}: {detail}"
    RESULTS.append(line)
    print(line)
    return ok


# ---------------------------------------------------------------- C1

def _fd_grad(f, x, h):
    return np.array([(f(x + h * e) - f(x - h * e)) / (2 * h) for e in np.eye(x.size)])


def _fd_hess(f, x, h):
    E = np.eye(x.size) * h
    return np.array([[(f(x + a + b) - f(x + a - b) - f(x - a + b) + f(x - a - b)) / (4 * h * h)
                      for b in E] for a in E])


def test_c1_derivative_correctness():
    rng = np.random.default_rng(0)
    t0 = time.perf_counter()
    worst_g = worst_d = 0.0
    for _ in range(100):
        d = int(rng.integers(1, 4))
        spec = KernelSpec(rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0, d))
        s1 = rng.uniform(-2, 2, d)
        s2 = s1 + rng.normal(0, 0.8, d)
        mu = rng.normal(0, 0.5, d)
        L = rng.normal(0, 0.3, (d, d))
        sigma = L @ L.T + np.outer(mu, mu)
        f = lambda x: kernel_eval(spec, x, s2)  # noqa: E731
        fd = _fd_grad(f, s1, 1e-5)
        worst_g = max(worst_g, np.linalg.norm(kernel_grad(spec, s1, s2) - fd) / np.linalg.norm(fd))
        ref = mu @ _fd_grad(f, s1, 1e-5) + 0.5 * np.sum(sigma * _fd_hess(f, s1, 1e-4))
        worst_d = max(worst_d, abs(kernel_diffusion(spec, s1, s2, mu, sigma) - ref) / abs(ref))
    elapsed = time.perf_counter() - t0
    ok = worst_g < 1e-6 and worst_d < 1e-4 and elapsed < 1.0
    assert record("C1 derivative correctness", ok,
                  f"max rel err grad {worst_g:.2e} (<1e-6), diffusion {worst_d:.2e} (<1e-4), {elapsed:.2f}s (<1s)")


# ---------------------------------------------------------------- C2

def test_c2_analytic_fixed_points():
    goal = ProblemDefinition(0.9, [[0, 1]], 1, lambda s: np.full(len(np.atleast_2d(s)), int(Region.GOAL)))
    model = TableModel([[0.5]], np.zeros((1, 1, 1)), np.zeros((1, 1, 1, 1)), np.zeros((1, 1)))
    spec = KernelSpec(1.0, [1.0])
    _, vr, _ = policy_iteration(spec, make_supporting_set(spec, [[0.5]], goal, 0.1), model, goal)
    err_goal = abs(vr.values[0] - 10.0)

    rng = np.random.default_rng(1)
    states = np.arange(5, dtype=float)[:, None] * 2.0
    R = rng.uniform(-1, 1, (5, 1))
    model = TableModel(states, np.zeros((5, 1, 1)), np.zeros((5, 1, 1, 1)), R)
    free = free_problem(1, 1, hi=10.0)
    vr = policy_evaluation(spec, make_supporting_set(spec, states, free, 0.0), model, np.zeros(5, dtype=int), free)
    err_zero = float(np.max(np.abs(vr.values - R[:, 0] / 0.1)))
    ok = err_goal <= 1e-9 and err_zero <= 1e-8
    assert record("C2 analytic fixed points", ok,
                  f"|V_goal - 10| = {err_goal:.1e} (<=1e-9), max |V - R/(1-g)| = {err_zero:.1e} (<=1e-8)")


# ---------------------------------------------------------------- C3

def random_instance(rng):
    """Random small problem: 2-5 states, 2-3 actions, 1-2 dims, all states free."""
    n = int(rng.integers(2, 6))
    q = int(rng.integers(2, 4))
    d = int(rng.integers(1, 3))
    while True:
        st = rng.uniform(0, 4, (n, d))
        if min(np.linalg.norm(st[i] - st[j]) for i in range(n) for j in range(i)) > 0.5:
            break
    mu = rng.normal(0, 0.3, (n, q, d))
    L = rng.normal(0, 0.2, (n, q, d, d))
    sigma = L @ np.swapaxes(L, -1, -2) + mu[..., :, None] * mu[..., None, :]
    R = rng.uniform(-1, 1, (n, q))
    spec = KernelSpec(1.0, np.full(d, rng.uniform(0.5, 1.5)))
    lam = rng.uniform(0.1, 1.0)
    return spec, TableModel(st, mu, sigma, R), free_problem(d, q), lam


def exhaustive_optimum(spec, supp, model, problem):
    """Evaluate every deterministic policy. Returns the policy whose values
    dominate all others componentwise (None if there is none) and the largest
    |V| seen."""
    values = {p: policy_evaluation(spec, supp, model, np.array(p), problem).values
              for p in itertools.product(range(model.n_actions), repeat=supp.n)}
    vmax = max(float(np.max(np.abs(v))) for v in values.values())
    best = [p for p, v in values.items() if all(np.all(v >= w - 1e-12) for w in values.values())]
    return (best[0] if best else None), vmax


def test_c3_oracle_equivalence():
    rng = np.random.default_rng(0)
    t0 = time.perf_counter()
    matches = drawn = unbounded = no_optimum = 0
    checked = 0
    while checked < 20:
        spec, model, problem, lam = random_instance(rng)
        drawn += 1
        supp = make_supporting_set(spec, model.states, problem, lam)
        best, vmax = exhaustive_optimum(spec, supp, model, problem)
        # a discounted MDP cannot exceed max|R| / (1 - gamma) in any state
        if vmax > np.max(np.abs(model.reward)) / (1 - problem.gamma):
            unbounded += 1
            continue
        if best is None:
            no_optimum += 1
            continue
        policy, _, _ = policy_iteration(spec, supp, model, problem)
        matches += tuple(policy) == best
        checked += 1
    elapsed = time.perf_counter() - t0
    ok = matches == 20 and elapsed < 30
    assert record("C3 oracle equivalence", ok,
                  f"{matches}/20 instances match exhaustive search, {elapsed:.1f}s (<30s); "
                  f"{drawn} drawn, skipped {unbounded} with values outside the discounted range "
                  f"and {no_optimum} without a dominating policy")


# ---------------------------------------------------------------- C4 / C6 share one sweep

@pytest.fixture(scope="module")
def plane_sweep():
    world = default_plane_world()
    states = evenly_spaced(world.problem.bounds, (10, 10))
    cfg = RolloutConfig(n_start_states=1000, trials_per_state=5, max_steps=200, base_seed=0)
    t0 = time.perf_counter()
    pm = hyperparameter_sweep(world, states, SWEEP_AXIS, SWEEP_AXIS, cfg, max_iterations=100)
    return pm, time.perf_counter() - t0


def test_c4_plane_navigation(plane_sweep):
    pm, elapsed = plane_sweep
    i, j = pm.best()
    rate = float(pm.goal_rates[i, j])
    ok = rate >= 0.9 and pm.best_return > 0 and elapsed < 600
    assert record("C4 plane navigation", ok,
                  f"best cell lengthscale {pm.lengthscales[i]}, lambda {pm.lambdas[j]}: goal rate {rate:.3f} "
                  f"(>=0.90), average return {pm.best_return:.4f} (>0); sweep {elapsed:.0f}s (<600s)")


def test_c6_convergence(plane_sweep):
    pm, _ = plane_sweep
    i, j = pm.best()
    conv = pm.converged
    flagged = all(pm.status[a][b] != "converged" for a, b in zip(*np.nonzero(~conv)))
    worst = int(pm.iterations[conv].max()) if conv.any() else 0
    best_iters = int(pm.iterations[i, j])
    ok = worst <= 100 and flagged and conv[i, j] and best_iters <= 30
    others = [f"({pm.lengthscales[a]}, {pm.lambdas[b]}): {pm.status[a][b]}" for a, b in zip(*np.nonzero(~conv))]
    assert record("C6 convergence", ok,
                  f"{int(conv.sum())}/36 cells converged, max {worst} iterations (<=100); best cell "
                  f"{best_iters} iterations (<=30); flagged: {', '.join(others) or 'none'}")


# ---------------------------------------------------------------- C5

def _best_per_seed(world, states, method, seeds, cfg_kw):
    """Solve each sweep cell once (solves do not depend on the seed), then
    evaluate it under every rollout seed. Returns the best return per seed."""
    best = np.full(len(seeds), -np.inf)
    for ls, lam in itertools.product(SWEEP_AXIS, SWEEP_AXIS):
        try:
            pol, _, _ = solve(world, states, ls, lam, method)
        except np.linalg.LinAlgError:
            continue
        for k, seed in enumerate(seeds):
            r = average_return(pol, world, RolloutConfig(base_seed=seed, **cfg_kw)).average_return
            best[k] = max(best[k], r)
    return best


def test_c5_method_ordering():
    world = default_plane_world()
    seeds = [0, 1, 2, 3, 4]
    cfg_kw = dict(n_start_states=100, trials_per_state=5, max_steps=200)
    lines = []
    ok = True
    means = {}
    t0 = time.perf_counter()
    for counts in ((6, 6), (10, 10)):
        states = evenly_spaced(world.problem.bounds, counts)
        taylor = _best_per_seed(world, states, "taylor", seeds, cfg_kw).mean()
        direct = _best_per_seed(world, states, "direct", seeds, cfg_kw).mean()
        grid = []
        for seed in seeds:
            mdp = discretize(world, counts, 1000, seed)
            policy, values, _ = grid_policy_iteration(mdp)
            sol = GridSolution(mdp, policy, values)
            grid.append(average_return(sol, world, RolloutConfig(base_seed=seed, **cfg_kw)).average_return)
        grid = float(np.mean(grid))
        means[counts] = taylor
        ok &= taylor >= grid - 0.02 and abs(taylor - direct) <= 0.05
        lines.append(f"{counts[0]}x{counts[1]}: Taylor {taylor:.4f}, direct {direct:.4f}, grid {grid:.4f}")
    elapsed = time.perf_counter() - t0
    assert record("C5 method ordering", ok,
                  "; ".join(lines) + f" (need Taylor >= grid - 0.02 and |Taylor - direct| <= 0.05; "
                  f"means over 5 seeds, {elapsed:.0f}s)")
    # informational: more supporting states should help, not asserted
    RESULTS.append(f"[INFO] 10x10 best {means[(10, 10)]:.4f} vs 6x6 best {means[(6, 6)]:.4f}")


# ---------------------------------------------------------------- C7

def test_c7_expected_kernel_identity():
    rng = np.random.default_rng(0)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(20):
        d = int(rng.integers(1, 4))
        spec = KernelSpec(rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0, d))
        mean = rng.uniform(-2, 2, d)
        L = rng.normal(0, 0.5, (d, d))
        cov = L @ L.T
        sj = mean + rng.normal(0, 1.0, d)
        x = rng.multivariate_normal(mean, cov, 10**6)
        vals = kernel_matrix(spec, x, sj[None])[:, 0]
        z = abs(gaussian_expected_kernel(spec, mean, cov, sj) - vals.mean()) / (vals.std(ddof=1) / 1e3)
        worst = max(worst, z)
    elapsed = time.perf_counter() - t0
    ok = worst <= 3.0 and elapsed < 60
    assert record("C7 Gaussian expected-kernel identity", ok,
                  f"max |z| over 20 configs {worst:.2f} (<=3 SE, 1e6 samples), {elapsed:.1f}s (<60s)")


# ---------------------------------------------------------------- C8

def test_c8_terrain_sampler_ordering():
    world = default_terrain_world()
    seeds = [0, 1, 2, 3, 4]
    ret = {"evenly_spaced": [], "importance": []}
    slope = {"evenly_spaced": [], "importance": []}
    for seed in seeds:
        cfgs = {"evenly_spaced": SamplerConfig(counts=(7, 7)),
                "importance": SamplerConfig(strategy="importance", n=49, seed=seed)}
        for name, sc in cfgs.items():
            states = sample_states(sc, world).states
            pol, _, _ = solve(world, states, 2.0, 1.0)
            res = average_return(pol, world, RolloutConfig(n_start_states=200, trials_per_state=5, base_seed=seed),
                                 track=world.slope)
            ret[name].append(res.average_return)
            slope[name].append(res.track_mean)
    r_even, r_imp = np.mean(ret["evenly_spaced"]), np.mean(ret["importance"])
    s_even, s_imp = np.degrees(np.mean(slope["evenly_spaced"])), np.degrees(np.mean(slope["importance"]))
    ok = r_imp >= r_even and s_imp < s_even
    assert record("C8 terrain sampler ordering", ok,
                  f"importance return {r_imp:.4f} vs evenly spaced {r_even:.4f}; mean traversed slope "
                  f"{s_imp:.2f} deg vs {s_even:.2f} deg (N=49, 5 seeds)")


# ---------------------------------------------------------------- C9

def test_c9_moment_consistency():
    worlds = {
        "plane": default_plane_world(),
        "terrain": default_terrain_world(),
        "unicycle": UnicycleWorld(bounds=((0.0, 10.0), (0.0, 10.0)), goal=UnicycleWorld().goal,
                                  heightmap=load_bundled_heightmap()),
    }
    parts = []
    ok = True
    for k, (name, world) in enumerate(worlds.items()):
        states, actions = random_pairs(world, 20, seed=100 + k)
        z = moment_zscores(world, states, actions, 10**5, seed=k)
        ok &= z <= 4.0
        parts.append(f"{name} max |z| {z:.2f}")
    assert record("C9 moment consistency", ok, ", ".join(parts) + " (<=4 SE, 20 pairs, 1e5 draws)")


# ---------------------------------------------------------------- C10

def test_c10_determinism(tmp_path):
    cfg = {"seed": 7, "world": {"type": "plane"},
           "sampler": {"strategy": "evenly_spaced", "counts": [8, 8]},
           "solver": {"lengthscale": 1.5, "lambda": 1.0},
           "eval": {"n_start_states": 450, "trials_per_state": 5, "max_steps": 200}}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    runs = {}
    for tag, threads in (("a", 1), ("b", 1), ("c", 4)):
        out = tmp_path / tag
        assert cli_main(["solve", "--config", str(path), "--out", str(out), "--threads", str(threads)]) == 0
        assert cli_main(["eval", "--config", str(path), "--out", str(out / "eval"), "--solution", str(out),
                         "--threads", str(threads)]) == 0
        runs[tag] = {str(f.relative_to(out)): f.read_bytes() for f in sorted(out.rglob("*"))
                     if f.is_file() and f.name != "timing.json"}
    same = runs["a"] == runs["b"] == runs["c"]
    assert record("C10 determinism", same,
                  f"{len(runs['a'])} files byte-identical across two runs and threads 1/4 "
                  f"(2250 rollouts, timing.json excluded)")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
