"""Point patterns, intensity fields, Poisson sampling, counting, integration.

A spatial Poisson process with intensity ``lam`` puts a Poisson(integral of
lam over A) count in any window A. Fields are cell-valued on a
:class:`~stipw.geometry.Region` grid; sampling uses rejection against a
constant envelope 1.1x the field maximum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .geometry import AlignmentError, CellRegion, Region

KIND_TREATMENT = "treatment"
KIND_OUTCOME = "outcome"
KIND_ANCHOR = "covariate-anchor"
_KINDS = (KIND_TREATMENT, KIND_OUTCOME, KIND_ANCHOR)

# Rejection envelope is this factor above the field maximum: strictly
# dominating, modest rejection overhead.
ENVELOPE_FACTOR = 1.1


@dataclass(frozen=True)
class PointPattern:
    """Events of one kind at one time step.

    Coincident points stay distinct in ``points``; only the binarized grid
    collapses them. Counting uses the coordinate list.
    """

    time_index: int
    points: np.ndarray
    kind: str = KIND_OUTCOME
    region: Region | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown pattern kind {self.kind!r}")
        if self.time_index < 0:
            raise ValueError("time_index must be >= 0")
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2).copy()
        if self.region is not None and not bool(np.all(self.region.contains(pts))):
            raise ValueError("pattern has points outside the region bounds")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]

    def binarize(self, region: Region) -> np.ndarray:
        """0/1 grid with a 1 in every cell containing at least one point."""
        grid = np.zeros((region.ny, region.nx), dtype=float)
        if len(self) > 0:
            rows, cols = region.cell_index(self.points)
            grid[rows, cols] = 1.0
        return grid

    def count_in(self, omega: CellRegion) -> int:
        """Number of points whose containing cell lies in omega."""
        if len(self) == 0:
            return 0
        rows, cols = omega.region.cell_index(self.points)
        return int(omega.mask[rows, cols].sum())


@dataclass(frozen=True)
class IntensityField:
    """Nonnegative intensity per grid cell, interpreted at cell centers."""

    values: np.ndarray
    region: Region

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.region.ny, self.region.nx):
            raise ValueError(
                f"field shape {v.shape} does not match grid "
                f"({self.region.ny}, {self.region.nx})"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("intensity values must be finite")
        if np.any(v < 0):
            raise ValueError("intensity values must be nonnegative")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @staticmethod
    def constant(region: Region, value: float) -> "IntensityField":
        return IntensityField(np.full((region.ny, region.nx), float(value)), region)

    def at(self, points: np.ndarray) -> np.ndarray:
        """Field value at arbitrary locations (value of the containing cell)."""
        rows, cols = self.region.cell_index(points)
        return self.values[rows, cols]


def integrate_intensity(field: IntensityField, omega: CellRegion | None = None) -> float:
    """Expected count in omega: midpoint-rule sum of value x cell area."""
    if omega is None:
        return float(field.values.sum() * field.region.cell_area)
    if omega.region != field.region:
        raise AlignmentError("omega is defined on a different grid than the field")
    return float(field.values[omega.mask].sum() * field.region.cell_area)


def sample_pattern(
    field: IntensityField,
    rng: np.random.Generator,
    time_index: int = 0,
    kind: str = KIND_OUTCOME,
) -> PointPattern:
    """Draw one pattern from the Poisson process with the given intensity.

    Rejection sampling: homogeneous candidates at rate
    ``ENVELOPE_FACTOR * max(field)`` over the region, each accepted with
    probability field(s) / envelope. Deterministic given (field, rng state).
    """
    region = field.region
    lam_max = float(field.values.max())
    if lam_max <= 0.0:
        return PointPattern(time_index, np.empty((0, 2)), kind, region)
    envelope = ENVELOPE_FACTOR * lam_max
    n_cand = rng.poisson(envelope * region.area)
    x0, y0, x1, y1 = region.bounds
    cand = np.column_stack([
        rng.uniform(x0, x1, n_cand),
        rng.uniform(y0, y1, n_cand),
    ])
    accept = rng.random(n_cand) < field.at(cand) / envelope
    return PointPattern(time_index, cand[accept], kind, region)


def sample_counts(
    field: IntensityField, rng: np.random.Generator, n_samples: int
) -> np.ndarray:
    """Counts of ``n_samples`` independent patterns, via batched rejection.

    Same law as counting :func:`sample_pattern` draws, vectorized over draws.
    """
    region = field.region
    lam_max = float(field.values.max())
    if lam_max <= 0.0:
        return np.zeros(n_samples, dtype=int)
    envelope = ENVELOPE_FACTOR * lam_max
    per_draw = rng.poisson(envelope * region.area, n_samples)
    total = int(per_draw.sum())
    x0, y0, x1, y1 = region.bounds
    cand = np.column_stack([
        rng.uniform(x0, x1, total),
        rng.uniform(y0, y1, total),
    ])
    accept = rng.random(total) < field.at(cand) / envelope
    owner = np.repeat(np.arange(n_samples), per_draw)
    return np.bincount(owner[accept], minlength=n_samples).astype(int)


def sample_pattern_inverse(
    field: IntensityField,
    rng: np.random.Generator,
    time_index: int = 0,
    kind: str = KIND_OUTCOME,
) -> PointPattern:
    """Exact inverse-cdf sampler for a cell-valued field.

    Distributionally identical to :func:`sample_pattern` (count is
    Poisson(integral), cells categorical by mass, uniform within cell) but
    without rejection overhead; used in simulation-heavy inner loops.
    """
    region = field.region
    total = integrate_intensity(field)
    if total <= 0.0:
        return PointPattern(time_index, np.empty((0, 2)), kind, region)
    n = rng.poisson(total)
    if n == 0:
        return PointPattern(time_index, np.empty((0, 2)), kind, region)
    flat = field.values.ravel()
    cdf = np.cumsum(flat)
    cells = np.searchsorted(cdf, rng.random(n) * cdf[-1], side="right")
    cells = np.minimum(cells, flat.size - 1)
    rows, cols = np.divmod(cells, region.nx)
    dx = region.width / region.nx
    dy = region.height / region.ny
    x0, y0, _, _ = region.bounds
    xs = x0 + (cols + rng.random(n)) * dx
    ys = y0 + (rows + rng.random(n)) * dy
    return PointPattern(time_index, np.column_stack([xs, ys]), kind, region)


def poisson_log_pmf(k, lam):
    """log P(K = k) for K ~ Poisson(lam), in log space via log-gamma.

    Accepts scalars or arrays; ``lam`` must be strictly positive.
    """
    k_arr = np.asarray(k)
    lam_arr = np.asarray(lam, dtype=float)
    if np.any(lam_arr <= 0.0) or not np.all(np.isfinite(lam_arr)):
        raise ValueError("lambda must be positive and finite")
    if np.any(k_arr < 0) or not np.all(np.equal(np.mod(k_arr, 1), 0)):
        raise ValueError("k must be a nonnegative integer")
    out = k_arr * np.log(lam_arr) - lam_arr - gammaln(k_arr + 1.0)
    return float(out) if np.isscalar(k) and np.isscalar(lam) else out
