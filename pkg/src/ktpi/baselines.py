"""Comparison solvers: tabular PI on a binned grid MDP, and kernel PI with the
exact Bellman expectation under Gaussian transitions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .envs.base import open_uniform
from .kernel import KernelSpec, wrap_angle
from .mdp import ProblemDefinition, Region, SupportingSet, ValueRepresentation
from .sampling import evenly_spaced
from .solver import SolveOptions, run_policy_iteration, solve_with_fixed_rows


@dataclass(frozen=True, eq=False)
class GridMDP:
    """Discretized MDP. Index ``n_cells`` is the absorbing out-of-bounds cell.

    ``P`` is ``(Q, n + 1, n + 1)`` and ``R`` is ``(Q, n + 1)``.
    """

    centers: np.ndarray
    counts: tuple
    bounds: np.ndarray
    P: np.ndarray
    R: np.ndarray
    labels: np.ndarray
    problem: ProblemDefinition

    def __post_init__(self):
        if np.any(self.P < 0):
            raise ValueError("negative transition probability")
        if np.max(np.abs(self.P.sum(axis=-1) - 1.0)) > 1e-9:
            raise ValueError("transition rows must sum to one")

    @property
    def n_cells(self) -> int:
        return self.centers.shape[0]

    def cell_index(self, states) -> np.ndarray:
        """Cell containing each state; out-of-bounds states map to ``n_cells``."""
        states = np.atleast_2d(np.asarray(states, dtype=float))
        lo, hi = self.bounds[:, 0], self.bounds[:, 1]
        counts = np.asarray(self.counts)
        frac = (states - lo) / (hi - lo)
        idx = np.clip(np.floor(frac * counts).astype(int), 0, counts - 1)
        flat = np.ravel_multi_index(tuple(idx.T), tuple(counts))
        inside = np.all((states >= lo) & (states <= hi), axis=1)
        return np.where(inside, flat, self.n_cells)


def discretize(world, counts, mc_samples=1000, seed=0) -> GridMDP:
    """Estimate cell-to-cell transitions by binning samples drawn from each cell centre."""
    problem = world.problem
    bounds = problem.bounds
    centers = evenly_spaced(bounds, counts)
    n, q = centers.shape[0], problem.n_actions
    labels = np.append(problem.classify_batch(centers), int(Region.OBSTACLE))
    shell = GridMDP(centers, tuple(int(c) for c in counts), bounds,
                    np.tile(np.eye(n + 1), (q, 1, 1)), np.zeros((q, n + 1)), labels, problem)
    P = np.zeros((q, n + 1, n + 1))
    R = np.zeros((q, n + 1))
    rng = np.random.default_rng(seed)
    rep = np.repeat(centers, mc_samples, axis=0)
    for a in range(q):
        u = open_uniform(rng, (rep.shape[0], world.noise_dim))
        nxt = world.sample_next_batch(rep, np.full(rep.shape[0], a), u)
        cells = shell.cell_index(nxt).reshape(n, mc_samples)
        rew = world.region_rewards(problem.classify_batch(nxt)).reshape(n, mc_samples)
        flat = cells + (n + 1) * np.arange(n)[:, None]
        P[a, :n] = np.bincount(flat.ravel(), minlength=n * (n + 1)).reshape(n, n + 1) / mc_samples
        R[a, :n] = rew.mean(axis=1)
    absorbing = labels != Region.FREE
    P[:, absorbing, :] = 0.0
    P[:, absorbing, np.flatnonzero(absorbing)] = 1.0
    R[:, absorbing] = 0.0
    return GridMDP(centers, shell.counts, bounds, P, R, labels, problem)


def _evaluate_grid(mdp: GridMDP, policy):
    idx = np.arange(policy.size)
    system = mdp.problem.gamma * mdp.P[policy, idx] - np.eye(policy.size)
    return solve_with_fixed_rows(system, -mdp.R[policy, idx], mdp.labels, mdp.problem)


def grid_policy_iteration(mdp: GridMDP, max_iterations=1000):
    """Exact tabular policy iteration; goal/obstacle cells have fixed values.

    Returns ``(policy, values, iterations)`` over all ``n + 1`` cells.
    """
    m = mdp.n_cells + 1
    gamma = mdp.problem.gamma
    free = mdp.labels == Region.FREE
    policy = np.zeros(m, dtype=int)
    values = _evaluate_grid(mdp, policy)
    for it in range(1, max_iterations + 1):
        q = mdp.R + gamma * mdp.P @ values
        best = np.argmax(q, axis=0)
        cur = q[policy, np.arange(m)]
        # keep the incumbent on numerical ties so exact PI cannot oscillate
        keep = cur >= q[best, np.arange(m)] - 1e-12 * (1.0 + np.abs(cur))
        new = np.where(free & ~keep, best, policy)
        if np.array_equal(new, policy):
            return policy, values, it
        policy = new
        values = _evaluate_grid(mdp, policy)
    return policy, values, max_iterations


@dataclass(frozen=True, eq=False)
class GridSolution:
    mdp: GridMDP
    policy: np.ndarray
    values: np.ndarray

    def act(self, states) -> np.ndarray:
        states = np.atleast_2d(states)
        d2 = np.sum((states[:, None, :] - self.mdp.centers[None]) ** 2, axis=-1)
        return self.policy[np.argmin(d2, axis=1)]

    def value(self, states) -> np.ndarray:
        states = np.atleast_2d(states)
        d2 = np.sum((states[:, None, :] - self.mdp.centers[None]) ** 2, axis=-1)
        return self.values[np.argmin(d2, axis=1)]


def gaussian_expected_kernel(spec: KernelSpec, mean, cov, s_j) -> float:
    """``E[k(s', s_j)]`` for ``s' ~ N(mean, cov)``."""
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(cov, dtype=float)
    return float(expected_kernel_matrix(spec, mean[None], cov[None], np.asarray(s_j, dtype=float)[None])[0, 0])


def expected_kernel_matrix(spec: KernelSpec, means, covs, Y) -> np.ndarray:
    """``out[i, j] = E[k(s', Y[j])]`` with ``s' ~ N(means[i], covs[i])``:
    ``c det(I + Sigma^{-1} C)^{-1/2} exp(-0.5 d^T (Sigma + C)^{-1} d)``."""
    means = np.atleast_2d(np.asarray(means, dtype=float))
    n, d = means.shape
    covs = np.broadcast_to(np.asarray(covs, dtype=float), (n, d, d))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    # a shared covariance (the usual case) needs one factorization only
    shared = n > 0 and np.array_equal(covs, np.broadcast_to(covs[0], covs.shape))
    uniq = covs[:1] if shared else covs
    if np.max(np.abs(uniq - np.swapaxes(uniq, -1, -2)), initial=0.0) > 1e-9:
        raise ValueError("covariance must be symmetric")
    total = np.diag(spec.lengthscales**2) + uniq
    sign, logdet = np.linalg.slogdet(np.eye(d) + uniq / spec.lengthscales[:, None] ** 2)
    if np.any(sign <= 0) or np.any(np.linalg.eigvalsh(total)[:, 0] <= 0):
        raise np.linalg.LinAlgError("Sigma + cov is singular or cov is not PSD")
    inv = np.broadcast_to(np.linalg.inv(total), (n, d, d))
    scale = np.broadcast_to(np.exp(-0.5 * logdet), (n,))
    diffs = []
    for i in range(d):
        di = means[:, i, None] - Y[None, :, i]
        if spec.wrap_mask[i]:
            di = wrap_angle(di)
        diffs.append(di)
    quad = 0.0
    for i in range(d):
        quad = quad + diffs[i] * diffs[i] * inv[:, i, i, None]
        for j in range(i + 1, d):
            quad = quad + diffs[i] * diffs[j] * (inv[:, i, j, None] + inv[:, j, i, None])
    return spec.amplitude * scale[:, None] * np.exp(-0.5 * quad)


def _transition_kernels(spec, supp_states, world, action, states=None):
    states = supp_states if states is None else states
    means, covs = world.gaussian_transition(states, action)
    return expected_kernel_matrix(spec, means, covs, supp_states)


def direct_kernel_policy_iteration(spec: KernelSpec, supp: SupportingSet, world, options: SolveOptions | None = None):
    """Kernel PI that integrates the value function against the known Gaussian transition.

    Evaluation solves ``(I - gamma P (lambda*I + K)^{-1}) V = R`` with the same
    fixed goal/obstacle rows as the Taylor solver.
    """
    options = options or SolveOptions()
    problem = world.problem
    gamma = problem.gamma
    q = problem.n_actions
    P = np.stack([_transition_kernels(spec, supp.states, world, a) for a in range(q)])
    R = np.stack([world.batch_expected_reward(supp.states, a) for a in range(q)])
    idx = np.arange(supp.n)

    def evaluate(policy):
        Pp = P[policy, idx]
        system = gamma * supp.gram_factor.solve(Pp.T).T - np.eye(supp.n)
        values = solve_with_fixed_rows(system, -R[policy, idx], supp.labels, problem)
        return ValueRepresentation.from_values(supp, values)

    def objectives_of(vr):
        return (R + gamma * np.sum(P * vr.alpha, axis=-1)).T

    def residual_of(obj, vr):
        free = supp.free
        if not free.any():
            return 0.0
        return float(np.mean(np.abs(np.max(obj[free], axis=1) - vr.values[free])))

    return run_policy_iteration(supp.n, supp.labels, evaluate, objectives_of, residual_of, options)


@dataclass(frozen=True, eq=False)
class DirectKernelSolution:
    spec: KernelSpec
    vr: ValueRepresentation
    world: object

    def objectives(self, states) -> np.ndarray:
        states = np.atleast_2d(states)
        supp = self.vr.supporting_set.states
        gamma = self.world.problem.gamma
        n, q = states.shape[0], self.world.problem.n_actions
        rep = np.tile(states, (q, 1))
        acts = np.repeat(np.arange(q), n)
        P = _transition_kernels(self.spec, supp, self.world, acts, rep)
        out = self.world.batch_expected_reward(rep, acts) + gamma * np.sum(P * self.vr.alpha, axis=1)
        return out.reshape(q, n).T

    def act(self, states) -> np.ndarray:
        return np.argmax(self.objectives(states), axis=1)
