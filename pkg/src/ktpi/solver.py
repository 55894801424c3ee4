"""Kernel Taylor-based approximate policy iteration.

Policy evaluation solves

    (M (lambda*I + K)^{-1} - (1 - gamma) I) V = -R

where ``M[i, j]`` applies ``gamma * (mu_i . grad + 0.5 div(sigma_i grad))`` to the
kernel column of supporting state ``j`` at supporting state ``i``. Goal and
obstacle rows are replaced by fixed values (``r_goal / (1 - gamma)`` and
``r_obs``).
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .kernel import KernelSpec, diffusion_matrix, kernel_matrix, weighted_derivatives
from .mdp import (
    MomentModel,
    ProblemDefinition,
    Region,
    SupportingSet,
    ValueRepresentation,
    check_moments,
)

MAX_SYSTEM_CONDITION = 1e13


class SolverError(np.linalg.LinAlgError):
    pass


@dataclass
class SolveOptions:
    max_iterations: int = 100
    initial_policy: np.ndarray | None = None


@dataclass
class SolveReport:
    iterations: int = 0
    converged: bool = False
    policy_changes: list[int] = field(default_factory=list)
    iteration_seconds: list[float] = field(default_factory=list)
    mean_values: list[float] = field(default_factory=list)
    bellman_residual: float = float("nan")
    cycle_detected: bool = False

    @property
    def decreasing_fraction(self) -> float:
        """Fraction of iterations whose mean supporting-state value went down."""
        v = np.asarray(self.mean_values)
        if v.size < 2:
            return 0.0
        return float(np.mean(np.diff(v) < 0))

    def as_dict(self, timings=True) -> dict:
        out = {
            "iterations": self.iterations,
            "converged": self.converged,
            "cycle_detected": self.cycle_detected,
            "policy_changes": list(self.policy_changes),
            "mean_values": list(self.mean_values),
            "bellman_residual": self.bellman_residual,
            "decreasing_fraction": self.decreasing_fraction,
        }
        if timings:
            out["iteration_seconds"] = list(self.iteration_seconds)
        return out


def _policy_moments(model, states, policy, n_actions):
    n, d = states.shape
    mu = np.zeros((n, d))
    sigma = np.zeros((n, d, d))
    reward = np.zeros(n)
    for a in range(n_actions):
        idx = np.flatnonzero(policy == a)
        if idx.size == 0:
            continue
        m, s = model.batch_moments(states[idx], a)
        check_moments(m, s)
        mu[idx], sigma[idx] = m, s
        reward[idx] = model.batch_expected_reward(states[idx], a)
    return mu, sigma, reward


def build_generator(spec: KernelSpec, supp: SupportingSet, model: MomentModel, policy, gamma: float) -> np.ndarray:
    policy = np.asarray(policy, dtype=int)
    if policy.shape != (supp.n,):
        raise ValueError("policy must have one action per supporting state")
    mu, sigma, _ = _policy_moments(model, supp.states, policy, model.n_actions)
    gen = gamma * diffusion_matrix(spec, supp.states, supp.states, mu, sigma)
    gen[supp.labels != Region.FREE] = 0.0
    return gen


def solve_with_fixed_rows(system, rhs, labels, problem: ProblemDefinition, hyper=""):
    """Solve ``system @ V = rhs`` with goal/obstacle unknowns pinned.

    Fixed unknowns are eliminated rather than replaced by identity rows so they
    come out exactly equal to their prescribed values.
    """
    n = rhs.size
    values = np.zeros(n)
    goal = labels == Region.GOAL
    obs = labels == Region.OBSTACLE
    values[goal] = problem.goal_value
    values[obs] = problem.r_obs
    free = ~(goal | obs)
    if not free.any():
        return values
    sub = system[np.ix_(free, free)]
    b = rhs[free] - system[np.ix_(free, ~free)] @ values[~free]
    cond = np.linalg.cond(sub)
    if not np.isfinite(cond) or cond > MAX_SYSTEM_CONDITION:
        raise SolverError(
            f"policy-evaluation system is singular (condition estimate {cond:.3g}; {hyper})"
        )
    values[free] = scipy.linalg.solve(sub, b)
    return values


def policy_evaluation(spec: KernelSpec, supp: SupportingSet, model: MomentModel, policy,
                      problem: ProblemDefinition) -> ValueRepresentation:
    gamma = problem.gamma
    policy = np.asarray(policy, dtype=int)
    mu, sigma, reward = _policy_moments(model, supp.states, policy, model.n_actions)
    gen = gamma * diffusion_matrix(spec, supp.states, supp.states, mu, sigma)
    # M A^{-1} = (A^{-1} M^T)^T since A is symmetric
    system = supp.gram_factor.solve(gen.T).T - (1.0 - gamma) * np.eye(supp.n)
    hyper = f"lengthscales={spec.lengthscales.tolist()}, lambda={supp.gram_factor.lam}"
    values = solve_with_fixed_rows(system, -reward, supp.labels, problem, hyper)
    return ValueRepresentation.from_values(supp, values)


def value_at(spec: KernelSpec, vr: ValueRepresentation, s) -> float:
    return float(values_at(spec, vr, np.asarray(s, dtype=float)[None])[0])


def values_at(spec: KernelSpec, vr: ValueRepresentation, states) -> np.ndarray:
    k = kernel_matrix(spec, states, vr.supporting_set.states)
    return np.sum(k * vr.alpha, axis=1)


def value_local_operator(spec: KernelSpec, vr: ValueRepresentation, s, mu, sigma, gamma: float) -> float:
    """``gamma * (mu . grad + 0.5 div(sigma grad)) v(s)`` for the kernel value function."""
    s = np.asarray(s, dtype=float)[None]
    mu = np.asarray(mu, dtype=float)[None]
    sigma = np.asarray(sigma, dtype=float)[None]
    return float(local_operator_batch(spec, vr, s, mu, sigma, gamma)[0])


def _apply_operator(grad, hess, mu, sigma, gamma):
    return gamma * (np.sum(mu * grad, axis=1) + 0.5 * np.sum(sigma * hess, axis=(1, 2)))


def local_operator_batch(spec, vr, states, mu, sigma, gamma):
    _, grad, hess = weighted_derivatives(spec, states, vr.supporting_set.states, vr.alpha)
    return _apply_operator(grad, hess, np.asarray(mu, dtype=float), np.asarray(sigma, dtype=float), gamma)


def action_objectives(spec: KernelSpec, vr: ValueRepresentation, model: MomentModel, states, gamma: float) -> np.ndarray:
    """``R(s, a) + gamma * (mu_a . grad + 0.5 div(sigma_a grad)) v(s)`` for every
    state row and action column.

    The gradient and Hessian of ``v`` are shared by all actions, so the kernel
    sums are formed once per state.
    """
    states = np.atleast_2d(np.asarray(states, dtype=float))
    _, grad, hess = weighted_derivatives(spec, states, vr.supporting_set.states, vr.alpha)
    n, q = states.shape[0], model.n_actions
    if getattr(model, "vectorized_actions", False):
        # one model call over all (action, state) pairs, action-major
        rep = np.tile(states, (q, 1))
        acts = np.repeat(np.arange(q), n)
        mu, sigma = model.batch_moments(rep, acts)
        check_moments(mu, sigma)
        op = _apply_operator(np.tile(grad, (q, 1)), np.tile(hess, (q, 1, 1)), mu, sigma, gamma)
        return (model.batch_expected_reward(rep, acts) + op).reshape(q, n).T
    out = np.empty((n, q))
    for a in range(q):
        mu, sigma = model.batch_moments(states, a)
        check_moments(mu, sigma)
        out[:, a] = model.batch_expected_reward(states, a) + _apply_operator(grad, hess, mu, sigma, gamma)
    return out


def _improve(objectives, labels, old):
    new = np.where(labels == Region.FREE, np.argmax(objectives, axis=1), 0)
    return new, int(np.count_nonzero(new != old))


def policy_improvement(spec: KernelSpec, supp: SupportingSet, model: MomentModel, vr: ValueRepresentation,
                       gamma: float, current=None):
    """Greedy update at the supporting states. Returns ``(policy, n_changed)``.

    Ties go to the lowest action index; goal and obstacle states get action 0.
    """
    obj = action_objectives(spec, vr, model, supp.states, gamma)
    old = np.zeros(supp.n, dtype=int) if current is None else np.asarray(current, dtype=int)
    return _improve(obj, supp.labels, old)


def _residual(objectives, values, labels, gamma):
    free = labels == Region.FREE
    if not free.any():
        return 0.0
    best = np.max(objectives[free], axis=1)
    return float(np.mean(np.abs(best - (1.0 - gamma) * values[free])))


def _policy_hash(policy):
    return hashlib.sha1(np.ascontiguousarray(policy, dtype=np.int64).tobytes()).hexdigest()


def run_policy_iteration(n, labels, evaluate, objectives_of, residual_of, options: SolveOptions):
    """Generic evaluate/improve loop shared by the kernel-based solvers.

    ``evaluate(policy) -> vr``; ``objectives_of(vr) -> (n, Q)`` action scores;
    ``residual_of(objectives, vr) -> float``.
    """
    if options.initial_policy is None:
        policy = np.zeros(n, dtype=int)
    else:
        policy = np.asarray(options.initial_policy, dtype=int).copy()
    report = SolveReport()
    seen = {_policy_hash(policy)}
    best = None
    vr = None
    for _ in range(max(1, options.max_iterations)):
        t0 = time.perf_counter()
        vr = evaluate(policy)
        obj = objectives_of(vr)
        residual = residual_of(obj, vr)
        new, changed = _improve(obj, labels, policy)
        report.iterations += 1
        report.policy_changes.append(changed)
        report.mean_values.append(float(np.mean(vr.values)))
        report.iteration_seconds.append(time.perf_counter() - t0)
        report.bellman_residual = residual
        if best is None or residual < best[2]:
            best = (policy, vr, residual)
        if changed == 0:
            report.converged = True
            return policy, vr, report
        h = _policy_hash(new)
        if h in seen:
            report.cycle_detected = True
            policy, vr, report.bellman_residual = best
            return policy, vr, report
        seen.add(h)
        policy = new
    return policy, vr, report


def policy_iteration(spec: KernelSpec, supp: SupportingSet, model: MomentModel, problem: ProblemDefinition,
                     options: SolveOptions | None = None):
    """Alternate evaluation and improvement until the action table stops changing.

    The Gram factorization held by ``supp`` is reused for every iteration. If the
    action table revisits an earlier one, the iterate with the smallest Bellman
    residual is returned and ``report.cycle_detected`` is set.
    """
    options = options or SolveOptions()
    gamma = problem.gamma

    def evaluate(policy):
        return policy_evaluation(spec, supp, model, policy, problem)

    def objectives_of(vr):
        return action_objectives(spec, vr, model, supp.states, gamma)

    def residual_of(obj, vr):
        return _residual(obj, vr.values, supp.labels, gamma)

    return run_policy_iteration(supp.n, supp.labels, evaluate, objectives_of, residual_of, options)
