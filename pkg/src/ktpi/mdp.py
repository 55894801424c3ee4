"""Types shared by the solver, the environments, the baselines and the evaluator."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Protocol, runtime_checkable

import numpy as np

from .kernel import GramFactor, KernelSpec, build_gram

MOMENT_TOL = 1e-9


class Region(enum.IntEnum):
    FREE = 0
    GOAL = 1
    OBSTACLE = 2


@dataclass(frozen=True)
class TransitionMoments:
    """First moment ``mu`` and non-central second moment ``sigma`` of the
    displacement ``s' - s``."""

    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        sigma = np.asarray(self.sigma, dtype=float)
        if mu.ndim != 1 or sigma.shape != (mu.size, mu.size):
            raise ValueError("mu must be (d,) and sigma (d, d)")
        check_moments(mu[None], sigma[None])
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)

    @property
    def covariance(self) -> np.ndarray:
        return self.sigma - np.outer(self.mu, self.mu)


def check_moments(mu, sigma, tol=MOMENT_TOL):
    """Validate a batch of moments: symmetric ``sigma`` and PSD ``sigma - mu mu^T``."""
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if np.max(np.abs(sigma - np.swapaxes(sigma, -1, -2)), initial=0.0) > tol:
        raise ValueError("second moment is not symmetric")
    cov = sigma - mu[..., :, None] * mu[..., None, :]
    cov = 0.5 * (cov + np.swapaxes(cov, -1, -2))
    if cov.size and np.min(np.linalg.eigvalsh(cov)) < -tol:
        raise ValueError("sigma - mu mu^T is not positive semidefinite")


@runtime_checkable
class MomentModel(Protocol):
    """What the solver is allowed to know about the dynamics.

    Batch methods take ``states`` of shape ``(n, d)`` and a single action index
    and return arrays; ``mu`` is ``(n, d)``, ``sigma`` ``(n, d, d)``.
    """

    n_actions: int

    def batch_moments(self, states, action: int) -> tuple[np.ndarray, np.ndarray]: ...

    def batch_expected_reward(self, states, action: int) -> np.ndarray: ...


@runtime_checkable
class SimulationModel(Protocol):
    noise_dim: int

    def sample_next_batch(self, states, actions, u) -> np.ndarray: ...


def moments(model: MomentModel, s, a: int) -> TransitionMoments:
    mu, sigma = model.batch_moments(np.asarray(s, dtype=float)[None], a)
    return TransitionMoments(mu[0], sigma[0])


def expected_reward(model: MomentModel, s, a: int) -> float:
    return float(model.batch_expected_reward(np.asarray(s, dtype=float)[None], a)[0])


@dataclass(frozen=True)
class ProblemDefinition:
    """Discount, workspace box, action count, region map and terminal rewards.

    ``bounds`` is ``(d, 2)`` with per-dimension ``[low, high]``; ``classifier``
    maps an ``(n, d)`` array to region labels.
    """

    gamma: float
    bounds: np.ndarray
    n_actions: int
    classifier: Callable[[np.ndarray], np.ndarray]
    r_goal: float = 1.0
    r_obs: float = -1.0

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if self.n_actions < 1:
            raise ValueError("need at least one action")
        object.__setattr__(self, "bounds", np.asarray(self.bounds, dtype=float))

    @property
    def goal_value(self) -> float:
        """Fixed value of goal states: the discounted sum of a repeated goal reward."""
        return self.r_goal / (1.0 - self.gamma)

    def classify_batch(self, states) -> np.ndarray:
        return np.asarray(self.classifier(np.atleast_2d(states)), dtype=int)


def classify(problem: ProblemDefinition, s) -> Region:
    return Region(int(problem.classify_batch(np.asarray(s, dtype=float)[None])[0]))


@dataclass(frozen=True, eq=False)
class SupportingSet:
    states: np.ndarray
    labels: np.ndarray
    gram_factor: GramFactor

    @property
    def n(self) -> int:
        return self.states.shape[0]

    @property
    def free(self) -> np.ndarray:
        return self.labels == Region.FREE


def make_supporting_set(spec: KernelSpec, states, problem: ProblemDefinition, lam: float) -> SupportingSet:
    states = np.atleast_2d(np.asarray(states, dtype=float))
    gram = build_gram(spec, states, lam)
    labels = problem.classify_batch(states)
    labels.setflags(write=False)
    return SupportingSet(gram.states, labels, gram)


@dataclass(frozen=True, eq=False)
class ValueRepresentation:
    """Values at the supporting states and ``alpha = (lambda*I + K)^{-1} V``."""

    values: np.ndarray
    alpha: np.ndarray
    supporting_set: SupportingSet

    @classmethod
    def from_values(cls, supp: SupportingSet, values) -> "ValueRepresentation":
        values = np.asarray(values, dtype=float)
        return cls(values, supp.gram_factor.solve(values), supp)
