"""Spatial domain: rectangular region, its cell grid, sub-regions, distances.

Everything downstream works on a rectangular region discretized into an
``ny x nx`` grid of equal cells. Intensity values live at cell centers,
integrals are midpoint sums, and sub-regions are unions of whole cells.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class AlignmentError(ValueError):
    """A sub-region does not line up with the cell grid."""


@dataclass(frozen=True)
class Region:
    """Axis-aligned rectangle with a regular cell grid.

    Args:
        bounds: (x0, y0, x1, y1) with x1 > x0 and y1 > y0.
        nx, ny: cells per axis (default 100 x 100).
    """

    bounds: tuple[float, float, float, float] = (0.0, 0.0, 1.0, 1.0)
    nx: int = 100
    ny: int = 100

    def __post_init__(self):
        x0, y0, x1, y1 = self.bounds
        if not (x1 > x0 and y1 > y0):
            raise ValueError(f"degenerate bounds {self.bounds}")
        if self.nx < 1 or self.ny < 1:
            raise ValueError("grid resolution must be >= 1 per axis")

    @property
    def width(self) -> float:
        return self.bounds[2] - self.bounds[0]

    @property
    def height(self) -> float:
        return self.bounds[3] - self.bounds[1]

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def cell_area(self) -> float:
        return self.area / (self.nx * self.ny)

    @property
    def diagonal(self) -> float:
        return float(np.hypot(self.width, self.height))

    @property
    def center(self) -> tuple[float, float]:
        x0, y0, x1, y1 = self.bounds
        return (0.5 * (x0 + x1), 0.5 * (y0 + y1))

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Cell-center coordinates as (xs[nx], ys[ny])."""
        x0, y0, x1, y1 = self.bounds
        xs = x0 + (np.arange(self.nx) + 0.5) * (self.width / self.nx)
        ys = y0 + (np.arange(self.ny) + 0.5) * (self.height / self.ny)
        return xs, ys

    def center_grid(self) -> np.ndarray:
        """All cell centers as an (ny, nx, 2) array."""
        xs, ys = self.cell_centers()
        gx, gy = np.meshgrid(xs, ys)
        return np.stack([gx, gy], axis=-1)

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Boolean mask of points (k, 2) inside the closed bounds."""
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        x0, y0, x1, y1 = self.bounds
        return (
            (points[:, 0] >= x0) & (points[:, 0] <= x1)
            & (points[:, 1] >= y0) & (points[:, 1] <= y1)
        )

    def cell_index(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(row, col) of the cell containing each point; boundary points clip inward."""
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        x0, y0, _, _ = self.bounds
        col = np.floor((points[:, 0] - x0) / self.width * self.nx).astype(int)
        row = np.floor((points[:, 1] - y0) / self.height * self.ny).astype(int)
        return np.clip(row, 0, self.ny - 1), np.clip(col, 0, self.nx - 1)


@dataclass(frozen=True)
class Polyline:
    """Ordered vertex chain (a synthetic or real road)."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 2:
            raise ValueError("polyline needs >= 2 vertices of shape (k, 2)")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)


@dataclass(frozen=True)
class CellRegion:
    """Sub-region omega as a union of whole grid cells (boolean mask)."""

    region: Region
    mask: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mask, dtype=bool)
        if m.shape != (self.region.ny, self.region.nx):
            raise AlignmentError(
                f"mask shape {m.shape} does not match grid "
                f"({self.region.ny}, {self.region.nx})"
            )
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "mask", m)

    @property
    def area(self) -> float:
        return float(self.mask.sum()) * self.region.cell_area

    @staticmethod
    def full(region: Region) -> "CellRegion":
        return CellRegion(region, np.ones((region.ny, region.nx), dtype=bool))

    @staticmethod
    def from_rectangle(
        region: Region, rect: tuple[float, float, float, float], tol: float = 1e-9
    ) -> "CellRegion":
        """Rectangle (x0, y0, x1, y1) whose edges must fall on cell boundaries."""
        x0, y0, x1, y1 = rect
        rx0, ry0, _, _ = region.bounds
        dx = region.width / region.nx
        dy = region.height / region.ny

        def to_edge(v, origin, step, n, name):
            f = (v - origin) / step
            i = round(f)
            if abs(f - i) > tol * max(1.0, n):
                raise AlignmentError(f"{name}={v} is not on a cell boundary")
            if i < 0 or i > n:
                raise AlignmentError(f"{name}={v} lies outside the region")
            return int(i)

        c0 = to_edge(x0, rx0, dx, region.nx, "x0")
        c1 = to_edge(x1, rx0, dx, region.nx, "x1")
        r0 = to_edge(y0, ry0, dy, region.ny, "y0")
        r1 = to_edge(y1, ry0, dy, region.ny, "y1")
        if c1 <= c0 or r1 <= r0:
            raise AlignmentError("empty rectangle")
        mask = np.zeros((region.ny, region.nx), dtype=bool)
        mask[r0:r1, c0:c1] = True
        return CellRegion(region, mask)


# Distance to an empty point set: far enough that exp(-2 d) underflows to ~0.
EMPTY_DISTANCE_FACTOR = 10.0


def empty_distance(region: Region) -> float:
    """Sentinel distance used when a target point set is empty."""
    return EMPTY_DISTANCE_FACTOR * region.diagonal


def distance_to_points(region: Region, points: np.ndarray) -> np.ndarray:
    """Per-cell Euclidean distance from cell centers to the nearest point.

    An empty point set yields the constant :func:`empty_distance` sentinel.
    """
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    if points.shape[0] == 0:
        return np.full((region.ny, region.nx), empty_distance(region))
    xs, ys = region.cell_centers()
    # Outer differences per axis stay 2-D, which is much faster than a
    # broadcast (ny, nx, k, 2) intermediate.
    dx2 = np.subtract.outer(xs, points[:, 0]) ** 2          # (nx, k)
    dy2 = np.subtract.outer(ys, points[:, 1]) ** 2          # (ny, k)
    d2 = dy2[:, None, :] + dx2[None, :, :]                  # (ny, nx, k)
    return np.sqrt(d2.min(axis=2))


def _segment_distance(px: np.ndarray, py: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distance from points (px, py) to the segment a-b."""
    abx, aby = b[0] - a[0], b[1] - a[1]
    denom = abx * abx + aby * aby
    apx = px - a[0]
    apy = py - a[1]
    if denom == 0.0:
        return np.hypot(apx, apy)
    t = np.clip((apx * abx + apy * aby) / denom, 0.0, 1.0)
    return np.hypot(apx - t * abx, apy - t * aby)


def distance_to_polylines(region: Region, lines: list[Polyline]) -> np.ndarray:
    """Per-cell distance from cell centers to the nearest polyline segment."""
    if not lines:
        raise ValueError("need at least one polyline")
    xs, ys = region.cell_centers()
    gx, gy = np.meshgrid(xs, ys)
    out = np.full_like(gx, np.inf)
    for line in lines:
        v = line.vertices
        for i in range(len(v) - 1):
            np.minimum(out, _segment_distance(gx, gy, v[i], v[i + 1]), out=out)
    return out


def distance_to_border(region: Region) -> np.ndarray:
    """Per-cell distance from cell centers to the region boundary."""
    xs, ys = region.cell_centers()
    x0, y0, x1, y1 = region.bounds
    dx = np.minimum(xs - x0, x1 - xs)
    dy = np.minimum(ys - y0, y1 - ys)
    return np.minimum(dy[:, None], dx[None, :])


def distance_to_center(region: Region) -> np.ndarray:
    """Per-cell distance from cell centers to the region center."""
    cx, cy = region.center
    return distance_to_points(region, np.array([[cx, cy]]))
