"""Rollouts, the average-return criterion, and hyperparameter sweeps.

Every trajectory draws its noise from its own stream, seeded from
``(base_seed, 1, start_index, trial)``; start states come from
``(base_seed, 0, start_index)``. Results therefore do not depend on how
trajectories are batched or split across threads.
"""

from __future__ import annotations

import enum
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .baselines import DirectKernelSolution, direct_kernel_policy_iteration
from .envs.base import open_uniform
from .kernel import IllConditionedError, KernelSpec
from .mdp import MomentModel, ProblemDefinition, Region, ValueRepresentation, make_supporting_set
from .solver import SolveOptions, SolverError, action_objectives, policy_iteration

CHUNK = 2048
THREADS_ENV = "KTPI_THREADS"


class Outcome(enum.IntEnum):
    GOAL = 0
    OBSTACLE = 1
    TIMEOUT = 2


@dataclass(frozen=True)
class RolloutConfig:
    n_start_states: int = 10_000
    trials_per_state: int = 5
    max_steps: int = 200
    base_seed: int = 0
    gamma: float | None = None

    def __post_init__(self):
        if min(self.n_start_states, self.trials_per_state, self.max_steps) < 1:
            raise ValueError("rollout counts must be positive")


def stream(base_seed: int, *key: int) -> np.random.Generator:
    """Independent generator for a ``(base_seed, *key)`` tuple via SeedSequence mixing."""
    return np.random.default_rng(np.random.SeedSequence([int(base_seed), *map(int, key)]))


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


@dataclass(frozen=True, eq=False)
class TaylorPolicy:
    """Greedy policy of a kernel value function under the Taylor objective."""

    spec: KernelSpec
    vr: ValueRepresentation
    model: MomentModel
    gamma: float

    def objectives(self, states) -> np.ndarray:
        return action_objectives(self.spec, self.vr, self.model, states, self.gamma)

    def act(self, states) -> np.ndarray:
        return np.argmax(self.objectives(states), axis=1)


def greedy_action(spec: KernelSpec, vr: ValueRepresentation, model: MomentModel, problem: ProblemDefinition, s) -> int:
    obj = action_objectives(spec, vr, model, np.asarray(s, dtype=float)[None], problem.gamma)
    return int(np.argmax(obj[0]))


@dataclass
class BatchResult:
    returns: np.ndarray
    outcomes: np.ndarray
    steps: np.ndarray
    track_sum: np.ndarray
    track_count: np.ndarray
    trajectories: list | None = None


def simulate(policy, world, starts, noise, gamma, record=False, track=None) -> BatchResult:
    """Run trajectories in lockstep. ``noise`` is ``(B, max_steps, noise_dim)``.

    A reward is collected on entering a goal (``r_goal``) or an obstacle or
    leaving the workspace (``r_obs``) and the trajectory stops there. A start
    inside the goal is worth ``r_goal / (1 - gamma)``.
    """
    problem = world.problem
    s = np.array(starts, dtype=float, copy=True)
    b, max_steps = noise.shape[0], noise.shape[1]
    ret = np.zeros(b)
    outcome = np.full(b, int(Outcome.TIMEOUT))
    steps = np.zeros(b, dtype=int)
    tsum = np.zeros(b)
    tcount = np.zeros(b, dtype=int)
    labels = problem.classify_batch(s)
    alive = labels == Region.FREE
    at_goal = labels == Region.GOAL
    ret[at_goal] = problem.r_goal / (1.0 - gamma)
    outcome[at_goal] = Outcome.GOAL
    in_obs = labels == Region.OBSTACLE
    ret[in_obs] = problem.r_obs
    outcome[in_obs] = Outcome.OBSTACLE
    paths = [[row.copy()] for row in s] if record else None
    disc = 1.0
    for t in range(max_steps):
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        cur = s[idx]
        if track is not None:
            tsum[idx] += track(cur)
            tcount[idx] += 1
        act = np.asarray(policy.act(cur), dtype=int)
        nxt = world.sample_next_batch(cur, act, noise[idx, t])
        lab = problem.classify_batch(nxt)
        disc *= gamma
        goal = lab == Region.GOAL
        obs = lab == Region.OBSTACLE
        ret[idx[goal]] += disc * problem.r_goal
        ret[idx[obs]] += disc * problem.r_obs
        outcome[idx[goal]] = Outcome.GOAL
        outcome[idx[obs]] = Outcome.OBSTACLE
        steps[idx] += 1
        alive[idx[goal | obs]] = False
        s[idx] = nxt
        if record:
            for k, i in enumerate(idx):
                paths[i].append(nxt[k].copy())
    trajs = [np.array(p) for p in paths] if record else None
    return BatchResult(ret, outcome, steps, tsum, tcount, trajs)


def rollout(policy, world, start, config: RolloutConfig, rng: np.random.Generator, track=None):
    """Single trajectory. Returns ``(discounted_return, outcome, trajectory)``."""
    gamma = config.gamma if config.gamma is not None else world.problem.gamma
    noise = open_uniform(rng, (1, config.max_steps, world.noise_dim))
    res = simulate(policy, world, np.asarray(start, dtype=float)[None], noise, gamma, record=True, track=track)
    return float(res.returns[0]), Outcome(int(res.outcomes[0])), res.trajectories[0]


def sample_start(world, base_seed, index) -> np.ndarray:
    """Uniform non-terminal start state for ``index``; terminal draws are redrawn."""
    rng = stream(base_seed, 0, index)
    bounds = world.problem.bounds
    for _ in range(10_000):
        s = rng.uniform(bounds[:, 0], bounds[:, 1])
        if world.problem.classify_batch(s[None])[0] == Region.FREE:
            return s
    raise RuntimeError("could not find a free start state")


def trial_stream(config: RolloutConfig, index, trial) -> np.random.Generator:
    return stream(config.base_seed, 1, index, trial)


@dataclass
class EvalResult:
    average_return: float
    per_start: np.ndarray
    returns: np.ndarray
    outcomes: np.ndarray
    steps: np.ndarray
    starts: np.ndarray
    track_mean: float = float("nan")

    def fraction(self, outcome: Outcome) -> float:
        return float(np.mean(self.outcomes == outcome))

    @property
    def goal_rate(self) -> float:
        return self.fraction(Outcome.GOAL)

    def summary(self) -> dict:
        return {
            "average_return": self.average_return,
            "goal_rate": self.goal_rate,
            "obstacle_rate": self.fraction(Outcome.OBSTACLE),
            "timeout_rate": self.fraction(Outcome.TIMEOUT),
            "mean_steps": float(np.mean(self.steps)),
            "track_mean": self.track_mean,
        }


def average_return(policy, world, config: RolloutConfig, threads: int | None = None, track=None) -> EvalResult:
    """Mean over start states of the mean discounted return over trials."""
    gamma = config.gamma if config.gamma is not None else world.problem.gamma
    n, m = config.n_start_states, config.trials_per_state
    starts = np.array([sample_start(world, config.base_seed, i) for i in range(n)])
    pairs = [(i, j) for i in range(n) for j in range(m)]
    chunks = [pairs[k:k + CHUNK] for k in range(0, len(pairs), CHUNK)]

    def run(chunk):
        noise = np.stack([
            open_uniform(trial_stream(config, i, j), (config.max_steps, world.noise_dim)) for i, j in chunk
        ])
        st = starts[[i for i, _ in chunk]]
        return simulate(policy, world, st, noise, gamma, track=track)

    threads = threads or default_threads()
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(run, chunks))
    else:
        results = [run(c) for c in chunks]
    returns = np.concatenate([r.returns for r in results]).reshape(n, m)
    outcomes = np.concatenate([r.outcomes for r in results]).reshape(n, m)
    steps = np.concatenate([r.steps for r in results]).reshape(n, m)
    per_start = returns.mean(axis=1)
    track_mean = float("nan")
    if track is not None:
        tsum = sum(float(np.sum(r.track_sum)) for r in results)
        tcount = sum(int(np.sum(r.track_count)) for r in results)
        track_mean = tsum / tcount if tcount else float("nan")
    return EvalResult(float(per_start.mean()), per_start, returns, outcomes, steps, starts, track_mean)


def kernel_spec_for(world, lengthscale, amplitude=1.0) -> KernelSpec:
    ls = np.broadcast_to(np.asarray(lengthscale, dtype=float), (world.dim,)).copy()
    return KernelSpec(amplitude, ls, getattr(world, "wrap_mask", None))


def solve(world, states, lengthscale, lam, method="taylor", amplitude=1.0, max_iterations=100):
    """Build the supporting set and run kernel PI. Returns ``(policy_object, vr, report)``.

    ``method`` is ``"taylor"`` (moments only) or ``"direct"`` (exact Gaussian expectation).
    """
    spec = kernel_spec_for(world, lengthscale, amplitude)
    supp = make_supporting_set(spec, states, world.problem, lam)
    options = SolveOptions(max_iterations=max_iterations)
    if method == "taylor":
        _, vr, report = policy_iteration(spec, supp, world, world.problem, options)
        return TaylorPolicy(spec, vr, world, world.problem.gamma), vr, report
    if method == "direct":
        _, vr, report = direct_kernel_policy_iteration(spec, supp, world, options)
        return DirectKernelSolution(spec, vr, world), vr, report
    raise ValueError(f"unknown method {method!r}")


@dataclass
class PerformanceMatrix:
    lengthscales: list
    lambdas: list
    returns: np.ndarray
    converged: np.ndarray
    iterations: np.ndarray
    solve_seconds: np.ndarray
    status: list = field(default_factory=list)
    goal_rates: np.ndarray | None = None

    def best(self) -> tuple[int, int]:
        r = np.where(np.isfinite(self.returns), self.returns, -np.inf)
        i, j = np.unravel_index(np.argmax(r), r.shape)
        return int(i), int(j)

    @property
    def best_return(self) -> float:
        i, j = self.best()
        return float(self.returns[i, j])

    def rows(self):
        for i, ls in enumerate(self.lengthscales):
            for j, lam in enumerate(self.lambdas):
                yield {
                    "lengthscale": ls,
                    "lambda": lam,
                    "avg_return": float(self.returns[i, j]),
                    "converged": bool(self.converged[i, j]),
                    "iterations": int(self.iterations[i, j]),
                    "solve_seconds": float(self.solve_seconds[i, j]),
                    "status": self.status[i][j],
                }


def hyperparameter_sweep(world, states, lengthscales, lambdas, config: RolloutConfig, method="taylor",
                         amplitude=1.0, max_iterations=100, threads=None, track=None) -> PerformanceMatrix:
    """Solve and evaluate every (lengthscale, lambda) cell. Failing cells are
    recorded in ``status`` and never abort the sweep."""
    if not lengthscales or not lambdas:
        raise ValueError("sweep axes must be non-empty")
    shape = (len(lengthscales), len(lambdas))
    pm = PerformanceMatrix(list(lengthscales), list(lambdas), np.full(shape, np.nan),
                           np.zeros(shape, dtype=bool), np.zeros(shape, dtype=int), np.zeros(shape),
                           [["" for _ in lambdas] for _ in lengthscales], np.full(shape, np.nan))
    for i, ls in enumerate(lengthscales):
        for j, lam in enumerate(lambdas):
            t0 = time.perf_counter()
            try:
                pol, _, report = solve(world, states, ls, lam, method, amplitude, max_iterations)
            except (IllConditionedError, SolverError) as exc:
                pm.status[i][j] = f"failed: {type(exc).__name__}"
                pm.solve_seconds[i, j] = time.perf_counter() - t0
                continue
            pm.solve_seconds[i, j] = time.perf_counter() - t0
            pm.converged[i, j] = report.converged
            pm.iterations[i, j] = report.iterations
            pm.status[i][j] = "converged" if report.converged else (
                "cycle" if report.cycle_detected else "max_iterations")
            res = average_return(pol, world, config, threads=threads, track=track)
            pm.returns[i, j] = res.average_return
            pm.goal_rates[i, j] = res.goal_rate
    return pm
