from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Rect:
    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self):
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise ValueError(f"degenerate rectangle {self}")

    def contains(self, xy) -> np.ndarray:
        xy = np.atleast_2d(xy)
        x, y = xy[:, 0], xy[:, 1]
        return (x >= self.xmin) & (x <= self.xmax) & (y >= self.ymin) & (y <= self.ymax)

    @property
    def center(self) -> np.ndarray:
        return np.array([(self.xmin + self.xmax) / 2, (self.ymin + self.ymax) / 2])

    def box_relation(self, lo, hi):
        """For boxes ``[lo, hi]`` (rows of ``(n, 2)``): ``(inside, outside)`` masks
        telling whether every point of the box is contained / not contained."""
        inside = (lo[:, 0] >= self.xmin) & (hi[:, 0] <= self.xmax) & (lo[:, 1] >= self.ymin) & (hi[:, 1] <= self.ymax)
        outside = (hi[:, 0] < self.xmin) | (lo[:, 0] > self.xmax) | (hi[:, 1] < self.ymin) | (lo[:, 1] > self.ymax)
        return inside, outside

    def to_dict(self):
        return {"type": "rect", "xmin": self.xmin, "ymin": self.ymin, "xmax": self.xmax, "ymax": self.ymax}


@dataclass(frozen=True)
class Disc:
    cx: float
    cy: float
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("disc radius must be positive")

    def contains(self, xy) -> np.ndarray:
        xy = np.atleast_2d(xy)
        return (xy[:, 0] - self.cx) ** 2 + (xy[:, 1] - self.cy) ** 2 <= self.radius**2

    @property
    def center(self) -> np.ndarray:
        return np.array([self.cx, self.cy])

    def box_relation(self, lo, hi, margin=1e-9):
        c = self.center
        far = np.maximum(np.abs(lo - c), np.abs(hi - c))
        near = np.clip(c, lo, hi) - c
        r = self.radius
        inside = np.sum(far**2, axis=1) <= (r * (1 - margin)) ** 2
        outside = np.sum(near**2, axis=1) > (r * (1 + margin)) ** 2
        return inside, outside

    def to_dict(self):
        return {"type": "disc", "cx": self.cx, "cy": self.cy, "radius": self.radius}


def region_from_dict(d):
    d = dict(d)
    kind = d.pop("type", "rect")
    if kind == "rect":
        return Rect(**d)
    if kind == "disc":
        return Disc(**d)
    raise ValueError(f"unknown region type {kind!r}")


def in_box(states, bounds) -> np.ndarray:
    """Whether each state lies in the axis-aligned box (first ``len(bounds)`` dims)."""
    states = np.atleast_2d(states)
    bounds = np.asarray(bounds, dtype=float)
    k = bounds.shape[0]
    s = states[:, :k]
    return np.all((s >= bounds[:, 0]) & (s <= bounds[:, 1]), axis=1)
