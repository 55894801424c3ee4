"""Supporting-state placement: lattice, uniform, slope-weighted and path-band samplers."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .mdp import Region

DUPLICATE_TOL = 1e-6


@dataclass(frozen=True)
class SamplerConfig:
    strategy: str = "evenly_spaced"
    counts: tuple | None = None
    n: int | None = None
    seed: int = 0
    pool_size: int | None = None
    weight_exponent: float = 1.0
    path: tuple | None = None
    start_arclength: float = 0.0
    band_length: float = 6.0
    band_width: float = 1.0
    reject_obstacles: bool = True

    STRATEGIES = ("evenly_spaced", "uniform", "importance", "trajectory")

    def __post_init__(self):
        if self.strategy not in self.STRATEGIES:
            raise ValueError(f"unknown sampler strategy {self.strategy!r}")
        if self.strategy == "evenly_spaced":
            if self.counts is None or min(self.counts) < 2:
                raise ValueError("evenly_spaced needs counts >= 2 per dimension")
        elif self.n is None or self.n < 1:
            raise ValueError(f"{self.strategy} sampler needs n >= 1")
        if self.band_width <= 0:
            raise ValueError("band_width must be positive")
        if self.weight_exponent < 0:
            raise ValueError("weight_exponent must be nonnegative")


class Sample(NamedTuple):
    states: np.ndarray
    goal: np.ndarray | None = None
    uniform_fallback: bool = False
    truncated: bool = False


def evenly_spaced(bounds, counts) -> np.ndarray:
    """Lattice with a half-cell inset so every point lies strictly inside ``bounds``."""
    bounds = np.asarray(bounds, dtype=float)
    counts = [int(c) for c in counts]
    if len(counts) != bounds.shape[0]:
        raise ValueError("need one count per dimension")
    if min(counts) < 2:
        raise ValueError("counts must be >= 2 per dimension")
    axes = [lo + (np.arange(c) + 0.5) * (hi - lo) / c for (lo, hi), c in zip(bounds, counts)]
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def uniform_random(bounds, n, seed, classify=None) -> np.ndarray:
    """``n`` uniform states; states labelled obstacle by ``classify`` are redrawn."""
    bounds = np.asarray(bounds, dtype=float)
    rng = np.random.default_rng(seed)
    out = np.empty((0, bounds.shape[0]))
    for _ in range(1000):
        need = n - out.shape[0]
        if need <= 0:
            break
        cand = rng.uniform(bounds[:, 0], bounds[:, 1], size=(2 * need, bounds.shape[0]))
        if classify is not None:
            cand = cand[np.asarray(classify(cand)) != Region.OBSTACLE]
        out = np.vstack([out, cand[:need]])
    if out.shape[0] < n:
        raise RuntimeError("could not place enough obstacle-free states")
    return out


def importance_resample(candidates, weights, n, seed, goal_center, exponent=1.0) -> Sample:
    """Pick ``n`` states: ``goal_center`` first, then ``n - 1`` candidates drawn
    without replacement with probability proportional to ``weight ** exponent``.

    Candidates within 1e-6 of an already chosen state are skipped. All-zero
    weights fall back to uniform selection and set ``uniform_fallback``.
    """
    candidates = np.atleast_2d(np.asarray(candidates, dtype=float))
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (candidates.shape[0],):
        raise ValueError("one weight per candidate required")
    if np.any(weights < 0) or not np.all(np.isfinite(weights)):
        raise ValueError("weights must be finite and nonnegative")
    goal_center = np.asarray(goal_center, dtype=float)
    rng = np.random.default_rng(seed)
    w = weights**exponent if exponent != 1.0 else weights.copy()
    fallback = not np.any(w > 0)
    if fallback:
        w = np.ones_like(w)
    # Efraimidis-Spirakis keys: sorting u**(1/w) descending is successive weighted
    # draws without replacement. Zero-weight candidates go last in random order.
    u = rng.random(w.size)
    pos = w > 0
    keys = np.full(w.size, -np.inf)
    keys[pos] = np.log(np.maximum(u[pos], 1e-300)) / w[pos]
    order = np.lexsort((-u, -keys))
    chosen = [goal_center]
    for idx in order:
        if len(chosen) >= n:
            break
        c = candidates[idx]
        if min(np.linalg.norm(c - s) for s in chosen) < DUPLICATE_TOL:
            continue
        chosen.append(c)
    if len(chosen) < n:
        raise ValueError(f"only {len(chosen)} distinct states available, requested {n}")
    return Sample(np.array(chosen), uniform_fallback=fallback)


def slope_importance(world, n, seed, pool_size=None, exponent=1.0) -> Sample:
    """Uniform candidate pool over the workspace, weighted by terrain slope."""
    pool_size = pool_size or 20 * n
    rng = np.random.default_rng(seed)
    bounds = world.problem.bounds
    cand = rng.uniform(bounds[:, 0], bounds[:, 1], size=(pool_size, bounds.shape[0]))
    goal = world.goal.center
    if bounds.shape[0] == 3:
        goal = np.append(goal, 0.0)
    return importance_resample(cand, world.slope(cand), n, rng.integers(2**63), goal, exponent)


def _polyline(path):
    path = np.atleast_2d(np.asarray(path, dtype=float))
    seg = np.diff(path, axis=0)
    length = np.linalg.norm(seg, axis=1)
    if path.shape[0] < 2 or not np.all(length > 0):
        raise ValueError("path must have at least two distinct consecutive vertices")
    cum = np.concatenate([[0.0], np.cumsum(length)])
    return path, seg / length[:, None], cum


def point_on_path(path, s):
    """Position and unit tangent at arclength(s) ``s`` along a polyline."""
    path, tangent, cum = _polyline(path)
    s = np.clip(np.asarray(s, dtype=float), 0.0, cum[-1])
    k = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(tangent) - 1)
    return path[k] + (s - cum[k])[..., None] * tangent[k], tangent[k]


def trajectory_band(path, start_arclength, band_length, band_width, n, seed, dim=2) -> Sample:
    """Uniform states in a band of width ``band_width`` around a path segment.

    The segment starts at ``start_arclength`` and runs ``band_length`` along the
    path; its end point is returned as ``goal`` (the temporary goal). When the
    path is shorter than requested the band stops at the path end and
    ``truncated`` is set. With ``dim=3`` a heading uniform on ``(-pi, pi]`` is
    appended.
    """
    _, _, cum = _polyline(path)
    start = float(np.clip(start_arclength, 0.0, cum[-1]))
    end = start + band_length
    truncated = end > cum[-1]
    end = min(end, cum[-1])
    rng = np.random.default_rng(seed)
    s = rng.uniform(start, end, size=n)
    lateral = rng.uniform(-band_width / 2, band_width / 2, size=n)
    pos, tan = point_on_path(path, s)
    normal = np.stack([-tan[:, 1], tan[:, 0]], axis=1)
    states = pos + lateral[:, None] * normal
    goal, _ = point_on_path(path, end)
    if dim == 3:
        heading = np.pi - rng.uniform(0.0, 2 * np.pi, size=n)
        states = np.column_stack([states, heading])
    return Sample(states, goal=goal, truncated=bool(truncated))


def point_to_polyline_distance(points, path) -> np.ndarray:
    path = np.atleast_2d(np.asarray(path, dtype=float))
    points = np.atleast_2d(np.asarray(points, dtype=float))[:, :2]
    a = path[:-1][None]
    ab = np.diff(path, axis=0)[None]
    ap = points[:, None, :] - a
    t = np.clip(np.sum(ap * ab, axis=-1) / np.sum(ab * ab, axis=-1), 0.0, 1.0)
    closest = a + t[..., None] * ab
    return np.min(np.linalg.norm(points[:, None, :] - closest, axis=-1), axis=1)


def sample_states(cfg: SamplerConfig, world) -> Sample:
    """Dispatch on ``cfg.strategy`` for a given world."""
    bounds = world.problem.bounds
    if cfg.strategy == "evenly_spaced":
        return Sample(evenly_spaced(bounds, cfg.counts))
    if cfg.strategy == "uniform":
        classify = world.classify_batch if cfg.reject_obstacles else None
        return Sample(uniform_random(bounds, cfg.n, cfg.seed, classify))
    if cfg.strategy == "importance":
        return slope_importance(world, cfg.n, cfg.seed, cfg.pool_size, cfg.weight_exponent)
    sample = trajectory_band(cfg.path, cfg.start_arclength, cfg.band_length, cfg.band_width,
                             cfg.n, cfg.seed, dim=bounds.shape[0])
    goal = sample.goal
    if bounds.shape[0] == 3:
        goal = np.append(goal, 0.0)
    return sample._replace(states=np.vstack([goal, sample.states]))
