"""ASCII-grid heightmaps and slope lookup."""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

HEADER_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "NODATA_value")


class HeightmapParseError(ValueError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True, eq=False)
class Heightmap:
    """Elevation grid. ``heights[0]`` is the northern (maximum y) row."""

    heights: np.ndarray
    cellsize: float
    origin: tuple[float, float] = (0.0, 0.0)
    nodata: float = -9999.0

    def __post_init__(self):
        h = np.array(self.heights, dtype=float)
        if h.ndim != 2 or min(h.shape) < 2:
            raise ValueError("heights must be a 2-D grid of at least 2x2 cells")
        if not self.cellsize > 0:
            raise ValueError("cellsize must be positive")
        bad = ~np.isfinite(h) & (h != self.nodata)
        if bad.any():
            raise ValueError("heights must be finite except for the nodata sentinel")
        h.setflags(write=False)
        object.__setattr__(self, "heights", h)
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))
        gy, gx = _grid_gradient(h, self.cellsize, self.nodata)
        object.__setattr__(self, "_gx", gx)
        object.__setattr__(self, "_gy", gy)

    @property
    def nrows(self) -> int:
        return self.heights.shape[0]

    @property
    def ncols(self) -> int:
        return self.heights.shape[1]

    @property
    def extent(self) -> np.ndarray:
        """``[[xmin, xmax], [ymin, ymax]]`` covered by the grid cells."""
        x0, y0 = self.origin
        return np.array([[x0, x0 + self.ncols * self.cellsize], [y0, y0 + self.nrows * self.cellsize]])

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        x0, y0 = self.origin
        xs = x0 + (np.arange(self.ncols) + 0.5) * self.cellsize
        ys = y0 + (np.arange(self.nrows) + 0.5) * self.cellsize
        return xs, ys

    def slopes(self, xy) -> np.ndarray:
        """Slope angle (radians) at each row of ``xy``."""
        xy = np.atleast_2d(np.asarray(xy, dtype=float))[:, :2]
        ext = self.extent
        eps = 1e-9 * self.cellsize
        outside = (
            (xy[:, 0] < ext[0, 0] - eps) | (xy[:, 0] > ext[0, 1] + eps)
            | (xy[:, 1] < ext[1, 0] - eps) | (xy[:, 1] > ext[1, 1] + eps)
        )
        if outside.any():
            raise ValueError(f"state {xy[np.argmax(outside)].tolist()} lies outside the heightmap")
        gx = self._interp(self._gx, xy)
        gy = self._interp(self._gy, xy)
        if not (np.all(np.isfinite(gx)) and np.all(np.isfinite(gy))):
            raise ValueError("slope query touches a nodata cell")
        return np.clip(np.arctan(np.hypot(gx, gy)), 0.0, np.pi / 2)

    def _interp(self, grid, xy):
        # grid rows run south to north here (already flipped)
        fx = np.clip((xy[:, 0] - self.origin[0]) / self.cellsize - 0.5, 0.0, self.ncols - 1)
        fy = np.clip((xy[:, 1] - self.origin[1]) / self.cellsize - 0.5, 0.0, self.nrows - 1)
        j0 = np.minimum(np.floor(fx).astype(int), self.ncols - 2)
        i0 = np.minimum(np.floor(fy).astype(int), self.nrows - 2)
        tx = fx - j0
        ty = fy - i0
        return (
            (1 - ty) * ((1 - tx) * grid[i0, j0] + tx * grid[i0, j0 + 1])
            + ty * ((1 - tx) * grid[i0 + 1, j0] + tx * grid[i0 + 1, j0 + 1])
        )


def _grid_gradient(heights, cellsize, nodata):
    z = np.where(heights == nodata, np.nan, heights)[::-1]
    gy, gx = np.gradient(z, cellsize)
    return gy, gx


def slope_at(hm: Heightmap, x: float, y: float) -> float:
    return float(hm.slopes([[x, y]])[0])


def load_heightmap(data) -> Heightmap:
    """Parse an ESRI ASCII grid from ``bytes`` or ``str``."""
    if isinstance(data, bytes):
        data = data.decode("ascii")
    lines = data.splitlines()
    header = {}
    lineno = 0
    for key in HEADER_KEYS:
        while lineno < len(lines) and not lines[lineno].strip():
            lineno += 1
        if lineno >= len(lines):
            raise HeightmapParseError(f"missing header field {key!r}", lineno + 1)
        parts = lines[lineno].split()
        if len(parts) != 2 or parts[0].lower() != key.lower():
            raise HeightmapParseError(f"expected header field {key!r}, got {lines[lineno]!r}", lineno + 1)
        try:
            header[key] = int(parts[1]) if key in ("ncols", "nrows") else float(parts[1])
        except ValueError:
            raise HeightmapParseError(f"malformed value for {key!r}: {parts[1]!r}", lineno + 1) from None
        lineno += 1
    ncols, nrows = header["ncols"], header["nrows"]
    if ncols < 2 or nrows < 2:
        raise HeightmapParseError("grid must have at least 2 rows and 2 columns")
    rows = []
    for i in range(lineno, len(lines)):
        text = lines[i].strip()
        if not text:
            continue
        parts = text.split()
        if len(parts) != ncols:
            raise HeightmapParseError(
                f"row {len(rows) + 1} has {len(parts)} values, header says ncols={ncols}", i + 1
            )
        try:
            rows.append([float(p) for p in parts])
        except ValueError:
            raise HeightmapParseError(f"non-numeric cell in row {len(rows) + 1}", i + 1) from None
    if len(rows) != nrows:
        raise HeightmapParseError(f"found {len(rows)} rows, header says nrows={nrows}")
    return Heightmap(np.array(rows), header["cellsize"], (header["xllcorner"], header["yllcorner"]),
                     header["NODATA_value"])


def dump_heightmap(hm: Heightmap) -> str:
    """Serialize to the ASCII grid format; ``repr`` floats round-trip bit-exactly."""
    buf = io.StringIO()
    buf.write(f"ncols {hm.ncols}\nnrows {hm.nrows}\n")
    buf.write(f"xllcorner {hm.origin[0]!r}\nyllcorner {hm.origin[1]!r}\n")
    buf.write(f"cellsize {hm.cellsize!r}\nNODATA_value {hm.nodata!r}\n")
    for row in hm.heights:
        buf.write(" ".join(repr(float(v)) for v in row))
        buf.write("\n")
    return buf.getvalue()


def heightmap_from_function(fn, extent, cellsize) -> Heightmap:
    """Sample ``fn(x, y)`` at cell centres over ``[[x0, x1], [y0, y1]]``."""
    (x0, x1), (y0, y1) = extent
    ncols = int(round((x1 - x0) / cellsize))
    nrows = int(round((y1 - y0) / cellsize))
    xs = x0 + (np.arange(ncols) + 0.5) * cellsize
    ys = y0 + (np.arange(nrows) + 0.5) * cellsize
    X, Y = np.meshgrid(xs, ys[::-1])
    return Heightmap(fn(X, Y), cellsize, (x0, y0))
