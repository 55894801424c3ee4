from __future__ import annotations

import numpy as np
from scipy.special import ndtri

from ..mdp import ProblemDefinition, Region, TransitionMoments

U_MIN = 2.0**-54
BOX_PAD = 1e-9


def open_uniform(rng: np.random.Generator, shape) -> np.ndarray:
    """Uniform draws on the open interval (0, 1)."""
    return np.maximum(rng.random(shape), U_MIN)


def std_normal(u) -> np.ndarray:
    return ndtri(u)


class World:
    """Common facets of the benchmark worlds.

    Subclasses provide ``problem``, ``noise_dim``, ``batch_moments`` and
    ``sample_next_batch(states, actions, u)`` where ``u`` holds ``noise_dim``
    open-uniform variates per row. Sampling is a pure function of ``u`` so
    callers control every random stream.

    Expected rewards are Monte Carlo estimates over a fixed bank of
    ``reward_samples`` variates drawn once from ``reward_seed``: every state and
    action sees the same noise, which keeps the estimate deterministic and
    smooth in the state.

    The ``action`` argument of the batch methods may also be an integer array
    with one action per state row (``vectorized_actions``).
    """

    vectorized_actions = True

    problem: ProblemDefinition
    noise_dim: int
    reward_samples: int = 100
    reward_seed: int = 0

    @property
    def n_actions(self) -> int:
        return self.problem.n_actions

    @property
    def dim(self) -> int:
        return self.problem.bounds.shape[0]

    def classify_batch(self, states) -> np.ndarray:
        return self.problem.classify_batch(states)

    def region_rewards(self, labels) -> np.ndarray:
        p = self.problem
        return np.where(labels == Region.GOAL, p.r_goal, np.where(labels == Region.OBSTACLE, p.r_obs, 0.0))

    def _reward_bank(self):
        bank = getattr(self, "_bank", None)
        if bank is None:
            rng = np.random.default_rng(self.reward_seed)
            bank = open_uniform(rng, (self.reward_samples, self.noise_dim))
            object.__setattr__(self, "_bank", bank)
        return bank

    def _constant_labels(self, states, action, bank) -> np.ndarray:
        """Label shared by all bank successors of each state, -1 if they may differ.

        Uses the xy boxes from ``reach_boxes`` (when a subclass defines it) that
        bound every sampled successor; states far from any region boundary then
        skip sampling. The result is identical to full sampling.
        """
        box_label = getattr(self.problem.classifier, "box_label", None)
        reach = getattr(self, "reach_boxes", None)
        if box_label is None or reach is None:
            return np.full(states.shape[0], -1)
        out = None
        for lo, hi in reach(states, action, bank):
            lab = box_label(lo - BOX_PAD, hi + BOX_PAD)
            out = lab if out is None else np.where(out == lab, out, -1)
        return out

    def batch_expected_reward(self, states, action: int) -> np.ndarray:
        """Mean region reward over the common noise bank."""
        states = np.atleast_2d(np.asarray(states, dtype=float))
        bank = self._reward_bank()
        const = self._constant_labels(states, action, bank)
        out = self.region_rewards(const).astype(float)
        pending = np.flatnonzero(const < 0)
        if pending.size:
            n, k = pending.size, bank.shape[0]
            acts = np.broadcast_to(np.asarray(action), (states.shape[0],))[pending]
            nxt = self.bank_successors(states[pending], acts, bank)
            out[pending] = self.region_rewards(self.classify_batch(nxt)).reshape(n, k).mean(axis=1)
        return out

    def bank_successors(self, states, action, bank) -> np.ndarray:
        """Successors of every state under every bank row, state-major ``(n * k, d)``."""
        n, k = states.shape[0], bank.shape[0]
        rep = np.repeat(states, k, axis=0)
        acts = np.repeat(np.broadcast_to(action, (n,)), k)
        return self.sample_next_batch(rep, acts, np.tile(bank, (n, 1)))

    def moments(self, s, a) -> TransitionMoments:
        mu, sigma = self.batch_moments(np.asarray(s, dtype=float)[None], a)
        return TransitionMoments(mu[0], sigma[0])

    def expected_reward(self, s, a) -> float:
        return float(self.batch_expected_reward(np.asarray(s, dtype=float)[None], a)[0])

    def sample_next(self, s, a, rng: np.random.Generator) -> np.ndarray:
        u = open_uniform(rng, (1, self.noise_dim))
        return self.sample_next_batch(np.asarray(s, dtype=float)[None], np.array([a]), u)[0]

    def displacement(self, s_next, s) -> np.ndarray:
        return np.asarray(s_next, dtype=float) - np.asarray(s, dtype=float)
