"""Benchmark worlds: plane navigation, slope-trap terrain, slope-aware unicycle."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from ..kernel import wrap_angle
from ..mdp import ProblemDefinition, Region, TransitionMoments
from .base import World, open_uniform, std_normal
from .geometry import Disc, Rect, region_from_dict
from .heightmap import Heightmap


class _Classifier:
    """Region labels: leaving ``bounds`` counts as an obstacle, and the goal
    takes priority over overlapping obstacles."""

    def __init__(self, bounds, goal, obstacles):
        self.bounds = np.asarray(bounds, dtype=float)[:2]
        self.goal = goal
        self.obstacles = list(obstacles)
        self._box = Rect(*self.bounds[:, 0], *self.bounds[:, 1])

    def __call__(self, states):
        states = np.atleast_2d(states)
        labels = np.full(states.shape[0], int(Region.FREE))
        for ob in self.obstacles:
            labels[ob.contains(states)] = Region.OBSTACLE
        labels[self.goal.contains(states)] = Region.GOAL
        labels[~self._box.contains(states)] = Region.OBSTACLE
        return labels

    def box_label(self, lo, hi) -> np.ndarray:
        """Label shared by every point of each xy box, or -1 when it may vary."""
        n = lo.shape[0]
        b_in, b_out = self._box.box_relation(lo, hi)
        g_in, g_out = self.goal.box_relation(lo, hi)
        o_in = np.zeros(n, dtype=bool)
        o_out = np.ones(n, dtype=bool)
        for ob in self.obstacles:
            i, o = ob.box_relation(lo, hi)
            o_in |= i
            o_out &= o
        label = np.full(n, -1)
        label[b_in & g_out & o_out] = Region.FREE
        label[b_in & g_out & o_in] = Region.OBSTACLE
        label[b_in & g_in] = Region.GOAL
        label[b_out] = Region.OBSTACLE
        return label


def _classifier(bounds, goal, obstacles):
    return _Classifier(bounds, goal, obstacles)


def circle_actions(states, actions, radius, n_actions):
    """Waypoints ``s + r (cos(2 pi a / Q), sin(2 pi a / Q))``."""
    ang = 2.0 * np.pi * np.asarray(actions, dtype=float) / n_actions
    step = radius * np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    return np.atleast_2d(states) + step


@dataclass(eq=False)
class PlaneWorld(World):
    """10 m x 10 m obstacle world with Gaussian waypoint-following transitions."""

    obstacles: list = field(default_factory=list)
    goal: Rect | Disc = field(default_factory=lambda: Rect(8.0, 8.0, 10.0, 10.0))
    bounds: tuple = ((0.0, 10.0), (0.0, 10.0))
    radius: float = 0.5
    n_actions: int = 12
    noise_std: float = 0.2
    gamma: float = 0.9
    r_goal: float = 1.0
    r_obs: float = -1.0
    reward_samples: int = 100
    reward_seed: int = 0

    noise_dim = 2

    def __post_init__(self):
        self.bounds = np.asarray(self.bounds, dtype=float)
        self.problem = ProblemDefinition(self.gamma, self.bounds, self.n_actions,
                                         _classifier(self.bounds, self.goal, self.obstacles),
                                         self.r_goal, self.r_obs)

    def waypoints(self, states, actions):
        return circle_actions(states, actions, self.radius, self.n_actions)

    def batch_moments(self, states, action):
        states = np.atleast_2d(np.asarray(states, dtype=float))
        mu = self.waypoints(states, np.full(states.shape[0], action)) - states
        sigma = self.noise_std**2 * np.eye(2) + mu[:, :, None] * mu[:, None, :]
        return mu, sigma

    def gaussian_transition(self, states, action):
        """Exact next-state distribution: means ``(n, 2)``, covariances ``(n, 2, 2)``."""
        states = np.atleast_2d(np.asarray(states, dtype=float))
        means = self.waypoints(states, np.full(states.shape[0], action))
        cov = np.broadcast_to(self.noise_std**2 * np.eye(2), (states.shape[0], 2, 2))
        return means, cov

    def sample_next_batch(self, states, actions, u):
        return self.waypoints(states, actions) + self.noise_std * std_normal(u[:, :2])

    def _offsets(self, bank):
        cached = getattr(self, "_offset_cache", None)
        if cached is None or cached[0] is not bank:
            cached = (bank, self.noise_std * std_normal(bank[:, :2]))
            self._offset_cache = cached
        return cached[1]

    def reach_boxes(self, states, action, bank):
        off = self._offsets(bank)
        w = self.waypoints(states, np.full(states.shape[0], action))
        return [(w + off.min(axis=0), w + off.max(axis=0))]

    def bank_successors(self, states, action, bank):
        w = self.waypoints(states, np.full(states.shape[0], action))
        return (w[:, None, :] + self._offsets(bank)[None]).reshape(-1, 2)


def load_plane_layout(name="plane_two_blocks.json") -> dict:
    return json.loads(resources.files("ktpi.data").joinpath(name).read_text())


def plane_world_from_dict(cfg: dict) -> PlaneWorld:
    cfg = dict(cfg)
    cfg.pop("type", None)
    layout = load_plane_layout(cfg.pop("layout")) if "layout" in cfg else {}
    layout.update(cfg)
    kwargs = {}
    if "obstacles" in layout:
        kwargs["obstacles"] = [region_from_dict(o) for o in layout["obstacles"]]
    if "goal" in layout:
        kwargs["goal"] = region_from_dict(layout["goal"])
    for key in ("bounds", "radius", "n_actions", "noise_std", "gamma", "r_goal", "r_obs",
                "reward_samples", "reward_seed"):
        if key in layout:
            kwargs[key] = layout[key]
    return PlaneWorld(**kwargs)


def default_plane_world(**overrides) -> PlaneWorld:
    """The bundled two-block layout with a goal block in the upper-right corner."""
    return plane_world_from_dict({"layout": "plane_two_blocks.json", **overrides})


@dataclass(eq=False)
class TerrainWorld(World):
    """Heightmap world where steep cells trap the robot with slope-proportional probability.

    There are no obstacle regions; leaving the heightmap counts as an obstacle hit.
    """

    heightmap: Heightmap = None
    goal: Rect | Disc = None
    critical_angle: float = np.deg2rad(30.0)
    radius: float = 0.5
    n_actions: int = 12
    noise_std: float = 0.2
    trap_std: float = 0.01
    gamma: float = 0.9
    r_goal: float = 1.0
    r_obs: float = -1.0
    reward_samples: int = 100
    reward_seed: int = 0

    noise_dim = 3

    def __post_init__(self):
        if self.heightmap is None or self.goal is None:
            raise ValueError("TerrainWorld needs a heightmap and a goal region")
        self.bounds = self.heightmap.extent
        self.problem = ProblemDefinition(self.gamma, self.bounds, self.n_actions,
                                         _classifier(self.bounds, self.goal, []),
                                         self.r_goal, self.r_obs)

    def slope(self, states) -> np.ndarray:
        return self.heightmap.slopes(states)

    def trap_probability(self, states) -> np.ndarray:
        return np.minimum(1.0, self.slope(states) / self.critical_angle)

    def waypoints(self, states, actions):
        return circle_actions(states, actions, self.radius, self.n_actions)

    def batch_moments(self, states, action):
        states = np.atleast_2d(np.asarray(states, dtype=float))
        p = self.trap_probability(states)[:, None]
        m = self.waypoints(states, np.full(states.shape[0], action)) - states
        move_cov = self.noise_std**2 * np.eye(2)
        trap_cov = self.trap_std**2 * np.eye(2)
        mu = (1.0 - p) * m
        outer_m = m[:, :, None] * m[:, None, :]
        pp = p[:, :, None]
        cov = (1.0 - pp) * move_cov + pp * trap_cov + pp * (1.0 - pp) * outer_m
        sigma = cov + mu[:, :, None] * mu[:, None, :]
        return mu, sigma

    def sample_next_batch(self, states, actions, u):
        states = np.atleast_2d(states)
        trapped = u[:, 0] < self.trap_probability(states)
        z = std_normal(u[:, 1:3])
        moved = self.waypoints(states, actions) + self.noise_std * z
        stuck = states + self.trap_std * z
        return np.where(trapped[:, None], stuck, moved)

    def reach_boxes(self, states, action, bank):
        z = std_normal(bank[:, 1:3])
        move, trap = self.noise_std * z, self.trap_std * z
        w = self.waypoints(states, np.full(states.shape[0], action))
        return [(w + move.min(axis=0), w + move.max(axis=0)),
                (states + trap.min(axis=0), states + trap.max(axis=0))]


@dataclass(eq=False)
class UnicycleWorld(World):
    """Pose ``(x, y, theta)`` world driven by ``(v, omega)`` commands.

    On a slope ``h`` the translation is shrunk by ``1 - 2h/pi`` so the robot
    stands still on a vertical face; heading integrates regardless.
    """

    bounds: tuple = ((0.0, 5.0), (0.0, 5.0))
    goal: Rect | Disc = field(default_factory=lambda: Disc(4.5, 4.5, 0.5))
    obstacles: list = field(default_factory=list)
    v_range: tuple = (-0.5, 1.5)
    omega_range: tuple = (-1.5, 1.5)
    n_v: int = 8
    n_omega: int = 8
    dt: float = 0.5
    heightmap: Heightmap | None = None
    noise_mean: np.ndarray = field(default_factory=lambda: np.zeros(3))
    noise_cov: np.ndarray = field(default_factory=lambda: np.diag([0.05**2, 0.05**2, 0.05**2]))
    gamma: float = 0.9
    r_goal: float = 1.0
    r_obs: float = -1.0
    reward_samples: int = 100
    reward_seed: int = 0

    noise_dim = 3

    def __post_init__(self):
        if self.n_v < 2 or self.n_omega < 2:
            raise ValueError("need at least two speed levels and two turn-rate levels")
        xy = np.asarray(self.bounds, dtype=float)
        self.bounds = np.vstack([xy, [[-np.pi, np.pi]]])
        self.noise_mean = np.asarray(self.noise_mean, dtype=float)
        self.noise_cov = np.asarray(self.noise_cov, dtype=float)
        w_, vecs = np.linalg.eigh(self.noise_cov)
        if w_.min() < -1e-12:
            raise ValueError("noise_cov must be positive semidefinite")
        self._noise_sqrt = vecs * np.sqrt(np.clip(w_, 0.0, None))
        v = np.linspace(*self.v_range, self.n_v)
        w = np.linspace(*self.omega_range, self.n_omega)
        vv, ww = np.meshgrid(v, w, indexing="ij")
        self.controls = np.stack([vv.ravel(), ww.ravel()], axis=1)
        self.problem = ProblemDefinition(self.gamma, self.bounds, len(self.controls),
                                         _classifier(xy, self.goal, self.obstacles),
                                         self.r_goal, self.r_obs)

    @property
    def wrap_mask(self):
        return np.array([False, False, True])

    def slope(self, states) -> np.ndarray:
        states = np.atleast_2d(states)
        if self.heightmap is None:
            return np.zeros(states.shape[0])
        return self.heightmap.slopes(states[:, :2])

    def step(self, states, actions) -> np.ndarray:
        """Deterministic motion ``f(s, a, h)`` with heading wrapped to ``(-pi, pi]``."""
        return self._shift(states, actions, wrap=True)

    def _shift(self, states, actions, wrap):
        states = np.atleast_2d(np.asarray(states, dtype=float))
        v, w = self.controls[np.asarray(actions)].T
        weight = 2.0 * self.slope(states) / np.pi
        x, y, th = states.T
        out = np.empty_like(states)
        out[:, 0] = (1 - weight) * (x + v * self.dt * np.cos(th)) + weight * x
        out[:, 1] = (1 - weight) * (y + v * self.dt * np.sin(th)) + weight * y
        out[:, 2] = th + w * self.dt
        if wrap:
            out[:, 2] = wrap_angle(out[:, 2])
        return out

    def batch_moments(self, states, action):
        states = np.atleast_2d(np.asarray(states, dtype=float))
        shift = self._shift(states, np.full(states.shape[0], action), wrap=False) - states
        mu = shift + self.noise_mean
        sigma = self.noise_cov + mu[:, :, None] * mu[:, None, :]
        return mu, sigma

    def sample_next_batch(self, states, actions, u):
        states = np.atleast_2d(states)
        nxt = self._shift(states, actions, wrap=False) + self.noise_mean + std_normal(u) @ self._noise_sqrt.T
        nxt[:, 2] = wrap_angle(nxt[:, 2])
        return nxt

    def reach_boxes(self, states, action, bank):
        off = (self.noise_mean + std_normal(bank) @ self._noise_sqrt.T)[:, :2]
        base = self._shift(states, np.full(states.shape[0], action), wrap=False)[:, :2]
        return [(base + off.min(axis=0), base + off.max(axis=0))]

    def displacement(self, s_next, s):
        d = np.asarray(s_next, dtype=float) - np.asarray(s, dtype=float)
        d = np.array(d, copy=True)
        d[..., 2] = wrap_angle(d[..., 2])
        return d


RIDGE_HEIGHT = 0.37
RIDGE_WIDTH = 0.4
RIDGE_PASS_Y = 7.5
RIDGE_PASS_WIDTH = 0.8
RIDGE_TILT = 0.087


def ridge_height(x, y):
    """Synthetic 10 m x 10 m terrain: a narrow north-south ridge along ``x = 5``
    (flanks just under 30 degrees) with a low pass near ``y = 7.5`` on a gentle
    northward tilt of about 5 degrees."""
    crest = RIDGE_HEIGHT * np.exp(-((x - 5.0) ** 2) / (2 * RIDGE_WIDTH**2))
    notch = 1.0 - np.exp(-((y - RIDGE_PASS_Y) ** 2) / (2 * RIDGE_PASS_WIDTH**2))
    return crest * notch + RIDGE_TILT * y


def ridge_heightmap(cellsize=0.1) -> Heightmap:
    """Grid of :func:`ridge_height`, rounded to micrometres like the bundled file."""
    from .heightmap import heightmap_from_function

    hm = heightmap_from_function(ridge_height, [[0.0, 10.0], [0.0, 10.0]], cellsize)
    return Heightmap(np.round(hm.heights, 6), cellsize, hm.origin)


def load_bundled_heightmap(name="ridge.asc") -> Heightmap:
    from .heightmap import load_heightmap

    return load_heightmap(resources.files("ktpi.data").joinpath(name).read_bytes())


def terrain_world_from_dict(cfg: dict) -> TerrainWorld:
    from .heightmap import load_heightmap

    cfg = dict(cfg)
    cfg.pop("type", None)
    if "heightmap_file" in cfg:
        with open(cfg.pop("heightmap_file"), "rb") as fh:
            hm = load_heightmap(fh.read())
    else:
        hm = load_bundled_heightmap(cfg.pop("heightmap", "ridge.asc"))
    goal = region_from_dict(cfg.pop("goal", {"type": "rect", "xmin": 8.0, "ymin": 4.0, "xmax": 9.5, "ymax": 6.0}))
    if "critical_angle_deg" in cfg:
        cfg["critical_angle"] = np.deg2rad(cfg.pop("critical_angle_deg"))
    return TerrainWorld(heightmap=hm, goal=goal, **cfg)


def default_terrain_world(**overrides) -> TerrainWorld:
    """Bundled ridge terrain with a goal block east of the ridge."""
    return terrain_world_from_dict(overrides)


def unicycle_world_from_dict(cfg: dict) -> UnicycleWorld:
    from .heightmap import load_heightmap

    cfg = dict(cfg)
    cfg.pop("type", None)
    kwargs = {}
    if "heightmap_file" in cfg:
        with open(cfg.pop("heightmap_file"), "rb") as fh:
            kwargs["heightmap"] = load_heightmap(fh.read())
    elif "heightmap" in cfg:
        kwargs["heightmap"] = load_bundled_heightmap(cfg.pop("heightmap"))
    if "goal" in cfg:
        kwargs["goal"] = region_from_dict(cfg.pop("goal"))
    if "obstacles" in cfg:
        kwargs["obstacles"] = [region_from_dict(o) for o in cfg.pop("obstacles")]
    for key in ("v_range", "omega_range", "bounds"):
        if key in cfg:
            kwargs[key] = tuple(map(tuple, cfg.pop(key))) if key == "bounds" else tuple(cfg.pop(key))
    kwargs.update(cfg)
    return UnicycleWorld(**kwargs)


def world_from_dict(cfg: dict):
    """Build any world from its config section (``type`` selects the class)."""
    kind = cfg.get("type", "plane")
    if kind == "plane":
        return plane_world_from_dict(cfg)
    if kind == "terrain":
        return terrain_world_from_dict(cfg)
    if kind == "unicycle":
        return unicycle_world_from_dict(cfg)
    raise ValueError(f"unknown world type {kind!r}")


# Single-state conveniences mirroring the batch methods.

def plane_moments(world: PlaneWorld, s, a) -> TransitionMoments:
    return world.moments(s, a)


def plane_expected_reward(world: PlaneWorld, s, a, n_samples=100, seed=0) -> float:
    """Monte Carlo ``E[R(s, a)]`` from ``n_samples`` successors drawn with ``seed``."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    u = open_uniform(np.random.default_rng(seed), (n_samples, world.noise_dim))
    nxt = world.bank_successors(np.asarray(s, dtype=float)[None], a, u)
    return float(np.mean(world.region_rewards(world.classify_batch(nxt))))


def terrain_moments(world: TerrainWorld, s, a) -> TransitionMoments:
    return world.moments(s, a)


def unicycle_step(world: UnicycleWorld, s, a) -> np.ndarray:
    return world.step(np.asarray(s, dtype=float)[None], np.array([a]))[0]


def unicycle_moments(world: UnicycleWorld, s, a) -> TransitionMoments:
    return world.moments(s, a)


def sample_next(world, s, a, rng: np.random.Generator) -> np.ndarray:
    return world.sample_next(s, a, rng)
