"""Synthetic world: covariates, treatment/outcome intensities, series simulation,
the log-intensity intervention, and the brute-force ground-truth oracle.

The generating process on the unit square: four static covariates built from
road/border/center distances and two anchor point patterns, then

    lam_Z_t(s) = exp(b0 + bX . X(s) + bZ K(D_{Z_{t-1}}) + bY K(D_{Y_{t-1}}))
    lam_Y_t(s) = exp(g0 + gX . X(s) + gZ K(D_{Z_[t-3,t]}) + gY K(D_{Y_{t-1}}))

with proximity kernel K(d) = exp(-2 d) (or the Gaussian relaxation
exp(-d^2 / (2 sigma^2))). Interventions replace lam_Z_j by
max(c * ln(lam_Z_j), 0) over an M-step window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import (
    AlignmentError,
    CellRegion,
    Polyline,
    Region,
    distance_to_border,
    distance_to_center,
    distance_to_points,
    distance_to_polylines,
)
from .point_process import (
    KIND_ANCHOR,
    KIND_OUTCOME,
    KIND_TREATMENT,
    IntensityField,
    PointPattern,
    integrate_intensity,
    sample_pattern,
    sample_pattern_inverse,
)
from .seeding import rng_for

KERNEL_EXPONENTIAL = "exponential"
KERNEL_GAUSSIAN = "gaussian"

# Outcome intensity looks back this many steps over treatments.
TREATMENT_WINDOW = 3


@dataclass(frozen=True)
class GenParams:
    """Coefficients of the generating process (defaults as published)."""

    beta0: float = -1.0
    beta_x: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)
    beta_z: float = 1.0
    beta_y: float = 1.0
    gamma0: float = 1.0
    gamma_x: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)
    gamma_z: float = 1.0
    gamma_y: float = 1.0
    a3_0: float = -0.2
    a3_1: float = 2.3
    a4_0: float = -0.2
    a4_1: float = 2.8
    kernel_mode: str = KERNEL_EXPONENTIAL
    sigma: float = 1.0 / math.sqrt(2.0)

    def __post_init__(self):
        if self.kernel_mode not in (KERNEL_EXPONENTIAL, KERNEL_GAUSSIAN):
            raise ValueError(f"unknown kernel_mode {self.kernel_mode!r}")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")

    def proximity(self, dist: np.ndarray) -> np.ndarray:
        """Proximity kernel applied to a distance array; equals 1 at d=0."""
        if self.kernel_mode == KERNEL_EXPONENTIAL:
            return np.exp(-2.0 * dist)
        return np.exp(-(dist ** 2) / (2.0 * self.sigma ** 2))


@dataclass(frozen=True)
class CovariateSet:
    """Static covariate grids X1..X4 and the anchor patterns behind X3/X4."""

    x1: np.ndarray
    x2: np.ndarray
    x3: np.ndarray
    x4: np.ndarray
    anchor3: PointPattern
    anchor4: PointPattern

    def __post_init__(self):
        for name in ("x1", "x2", "x3", "x4"):
            arr = np.asarray(getattr(self, name), dtype=float).copy()
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"covariate {name} has non-finite values")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def stacked(self) -> np.ndarray:
        return np.stack([self.x1, self.x2, self.x3, self.x4])

    def weighted_sum(self, coef: tuple[float, float, float, float]) -> np.ndarray:
        return (
            coef[0] * self.x1 + coef[1] * self.x2
            + coef[2] * self.x3 + coef[3] * self.x4
        )


def default_roads(region: Region) -> list[Polyline]:
    """Two fixed synthetic roads: the main diagonal and a 5-vertex arc."""
    x0, y0, x1, y1 = region.bounds
    w, h = x1 - x0, y1 - y0

    def at(fx, fy):
        return (x0 + fx * w, y0 + fy * h)

    diagonal = Polyline(np.array([at(0.0, 0.0), at(1.0, 1.0)]))
    arc = Polyline(np.array([
        at(0.05, 0.90), at(0.25, 0.60), at(0.50, 0.45),
        at(0.75, 0.40), at(0.95, 0.55),
    ]))
    return [diagonal, arc]


def covariate_anchor_intensity(x1: np.ndarray, a0: float, a1: float,
                               region: Region) -> IntensityField:
    """Anchor-generating intensity exp(a0 + a1 * X1)."""
    return IntensityField(np.exp(a0 + a1 * x1), region)


def build_covariates(
    region: Region,
    roads: list[Polyline],
    params: GenParams,
    seed: int,
    max_anchor_retries: int = 1000,
) -> CovariateSet:
    """Construct X1..X4 from road/border/center distances and anchor patterns.

    X1 = exp(-3 D_road) + ln(D_border), with the border distance floored at
    half a cell width so boundary cells stay finite. X3/X4 use the positive
    exponent exp(distance to the nearest anchor point), as published. Anchor
    patterns are redrawn (fresh substream) until nonempty, since an empty
    anchor set would leave X3/X4 undefined.
    """
    if not roads:
        raise ValueError("need at least one road")
    d_road = distance_to_polylines(region, roads)
    half_cell = 0.5 * min(region.width / region.nx, region.height / region.ny)
    d_border = np.maximum(distance_to_border(region), half_cell)
    x1 = np.exp(-3.0 * d_road) + np.log(d_border)
    x2 = np.exp(-3.0 * distance_to_center(region))

    def draw_anchor(a0: float, a1: float, tag: str) -> PointPattern:
        lam = covariate_anchor_intensity(x1, a0, a1, region)
        for retry in range(max_anchor_retries):
            pat = sample_pattern(lam, rng_for(seed, "anchor", tag, retry),
                                 time_index=0, kind=KIND_ANCHOR)
            if len(pat) > 0:
                return pat
        raise RuntimeError(f"anchor intensity for {tag} is degenerate (always empty)")

    anchor3 = draw_anchor(params.a3_0, params.a3_1, "x3")
    anchor4 = draw_anchor(params.a4_0, params.a4_1, "x4")
    x3 = np.exp(distance_to_points(region, anchor3.points))
    x4 = np.exp(distance_to_points(region, anchor4.points))
    return CovariateSet(x1, x2, x3, x4, anchor3, anchor4)


def _union_points(patterns: list[PointPattern]) -> np.ndarray:
    arrays = [p.points for p in patterns if len(p) > 0]
    if not arrays:
        return np.empty((0, 2))
    return np.vstack(arrays)


def treatment_intensity(
    region: Region,
    covariates: CovariateSet,
    prev_treatment: PointPattern | None,
    prev_outcome: PointPattern | None,
    params: GenParams,
) -> IntensityField:
    """Intensity generating Z_t from the step-(t-1) history."""
    z_pts = prev_treatment.points if prev_treatment is not None else np.empty((0, 2))
    y_pts = prev_outcome.points if prev_outcome is not None else np.empty((0, 2))
    log_lam = (
        params.beta0
        + covariates.weighted_sum(params.beta_x)
        + params.beta_z * params.proximity(distance_to_points(region, z_pts))
        + params.beta_y * params.proximity(distance_to_points(region, y_pts))
    )
    return IntensityField(np.exp(log_lam), region)


def outcome_intensity(
    region: Region,
    covariates: CovariateSet,
    treatments_window: list[PointPattern],
    prev_outcome: PointPattern | None,
    params: GenParams,
) -> IntensityField:
    """Intensity generating Y_t from the treatment window [t-3, t] and Y_{t-1}."""
    union = _union_points(treatments_window)
    y_pts = prev_outcome.points if prev_outcome is not None else np.empty((0, 2))
    log_lam = (
        params.gamma0
        + covariates.weighted_sum(params.gamma_x)
        + params.gamma_z * params.proximity(distance_to_points(region, union))
        + params.gamma_y * params.proximity(distance_to_points(region, y_pts))
    )
    return IntensityField(np.exp(log_lam), region)


@dataclass(frozen=True)
class Dataset:
    """One simulated (or ingested) series of treatment/outcome patterns.

    ``treatment_fields``/``outcome_fields`` hold the generating intensities
    when known (synthetic mode); they power the intervention transform and
    the ground-truth oracle.
    """

    region: Region
    covariates: CovariateSet
    gen_params: GenParams
    seed: int
    treatments: tuple[PointPattern, ...]
    outcomes: tuple[PointPattern, ...]
    treatment_fields: tuple[IntensityField, ...] | None = None
    outcome_fields: tuple[IntensityField, ...] | None = None
    roads: tuple[Polyline, ...] = ()

    def __post_init__(self):
        if len(self.treatments) != len(self.outcomes):
            raise ValueError("treatments and outcomes must have equal length")

    @property
    def T(self) -> int:
        return len(self.treatments)

    def treatment_window(self, t: int) -> list[PointPattern]:
        """Treatments with 1-based indices in [t-3, t], truncated at the start."""
        lo = max(1, t - TREATMENT_WINDOW)
        return [self.treatments[j - 1] for j in range(lo, t + 1)]

    def reduced_counts(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-step point counts (R(z_t), R(Y_t))."""
        rz = np.array([len(p) for p in self.treatments])
        ry = np.array([len(p) for p in self.outcomes])
        return rz, ry


def simulate_series(
    region: Region,
    roads: list[Polyline],
    params: GenParams,
    T: int,
    seed: int,
) -> Dataset:
    """Simulate T steps, threading history; bit-reproducible from the seed."""
    if T < 4:
        raise ValueError("need T >= 4 (outcome window spans four steps)")
    covariates = build_covariates(region, roads, params, seed)
    treatments: list[PointPattern] = []
    outcomes: list[PointPattern] = []
    z_fields: list[IntensityField] = []
    y_fields: list[IntensityField] = []
    for t in range(1, T + 1):
        prev_z = treatments[-1] if treatments else None
        prev_y = outcomes[-1] if outcomes else None
        lam_z = treatment_intensity(region, covariates, prev_z, prev_y, params)
        z_t = sample_pattern(lam_z, rng_for(seed, "treat", t), t, KIND_TREATMENT)
        treatments.append(z_t)
        z_fields.append(lam_z)

        lo = max(1, t - TREATMENT_WINDOW)
        window = treatments[lo - 1 : t]
        lam_y = outcome_intensity(region, covariates, window, prev_y, params)
        y_t = sample_pattern(lam_y, rng_for(seed, "out", t), t, KIND_OUTCOME)
        outcomes.append(y_t)
        y_fields.append(lam_y)
    return Dataset(
        region=region,
        covariates=covariates,
        gen_params=params,
        seed=seed,
        treatments=tuple(treatments),
        outcomes=tuple(outcomes),
        treatment_fields=tuple(z_fields),
        outcome_fields=tuple(y_fields),
        roads=tuple(roads),
    )


def intervene(field: IntensityField, c: float) -> IntensityField:
    """Intervened intensity max(c * ln(lam), 0); zero cells stay zero.

    The clamp keeps intensities nonnegative where lam < 1, which the
    published transform leaves undefined.
    """
    if c <= 0:
        raise ValueError("c must be positive")
    with np.errstate(divide="ignore"):
        h = np.where(field.values > 0.0,
                     np.maximum(c * np.log(field.values), 0.0), 0.0)
    return IntensityField(h, field.region)


@dataclass(frozen=True)
class InterventionSpec:
    """M-step stochastic intervention: per-step treatment intensities h_j."""

    M: int
    c: float
    fields: tuple[IntensityField, ...]

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("M must be >= 1")
        if self.M > len(self.fields):
            raise ValueError("M cannot exceed the number of per-step fields")

    @property
    def T(self) -> int:
        return len(self.fields)

    @staticmethod
    def from_dataset(dataset: Dataset, M: int, c: float) -> "InterventionSpec":
        """h_j = max(c * ln(lam_Z_j), 0) built from the dataset's true fields."""
        if dataset.treatment_fields is None:
            raise ValueError("dataset has no treatment intensity fields")
        fields = tuple(intervene(f, c) for f in dataset.treatment_fields)
        return InterventionSpec(M=M, c=c, fields=fields)


@dataclass(frozen=True)
class GroundTruth:
    """Oracle value of N_omega(F_H) with Monte Carlo diagnostics."""

    per_t: np.ndarray
    per_t_se: np.ndarray
    replications: int

    @property
    def value(self) -> float:
        return float(self.per_t.mean())

    @property
    def se(self) -> float:
        return float(np.sqrt((self.per_t_se ** 2).sum()) / len(self.per_t))


def _proximity_from_union(params: GenParams, d_a: np.ndarray, d_b: np.ndarray) -> np.ndarray:
    return params.proximity(np.minimum(d_a, d_b))


def ground_truth(
    dataset: Dataset,
    spec: InterventionSpec,
    omega: CellRegion | None,
    replications: int,
    seed: int,
    integral_cells: int = 600,
    chunk: int = 256,
) -> GroundTruth:
    """Brute-force oracle: re-simulate the intervened window and count outcomes.

    For each t in M..T and each replication, treatments over [t-M+1, t] are
    redrawn from the intervened fields, outcome fields are propagated through
    the window, and the final outcome count in omega is sampled; history
    before the window stays factual. Averages per t, then over t.

    The M=1 inner loop estimates each replication's outcome mass by an
    importance subsample of ``integral_cells`` grid cells (unbiased, fresh
    cells per chunk) before drawing the Poisson count; M>1 takes the general
    per-replication path with full fields.
    """
    if replications < 1:
        raise ValueError("replications must be >= 1")
    region = dataset.region
    if omega is None:
        omega = CellRegion.full(region)
    if omega.region != region:
        raise AlignmentError("omega grid does not match the dataset region")
    M, T = spec.M, dataset.T
    per_t = np.zeros(T - M + 1)
    per_t_se = np.zeros(T - M + 1)
    for i, t in enumerate(range(M, T + 1)):
        if M == 1:
            counts = _oracle_counts_m1(
                dataset, spec, omega, t, replications, seed, integral_cells, chunk
            )
        else:
            counts = _oracle_counts_general(
                dataset, spec, omega, t, replications, seed
            )
        per_t[i] = counts.mean()
        per_t_se[i] = counts.std(ddof=1) / math.sqrt(len(counts)) if len(counts) > 1 else 0.0
    return GroundTruth(per_t=per_t, per_t_se=per_t_se, replications=replications)


def _sample_cells(values: np.ndarray, rng: np.random.Generator, n: int) -> np.ndarray:
    """n cell indices drawn proportional to nonnegative cell values."""
    cdf = np.cumsum(values)
    idx = np.searchsorted(cdf, rng.random(n) * cdf[-1], side="right")
    return np.minimum(idx, values.size - 1)


def _oracle_counts_m1(
    dataset: Dataset,
    spec: InterventionSpec,
    omega: CellRegion,
    t: int,
    replications: int,
    seed: int,
    integral_cells: int,
    chunk: int,
) -> np.ndarray:
    """Vectorized replications for M=1: only Z_t is redrawn."""
    region = dataset.region
    params = dataset.gen_params
    cov = dataset.covariates

    h = spec.fields[t - 1]
    h_total = integrate_intensity(h)
    h_flat = h.values.ravel()

    lo = max(1, t - TREATMENT_WINDOW)
    factual_window = [dataset.treatments[j - 1] for j in range(lo, t)]
    d_fact = distance_to_points(region, _union_points(factual_window))
    prev_y = dataset.outcomes[t - 2] if t >= 2 else None
    y_pts = prev_y.points if prev_y is not None else np.empty((0, 2))
    base = np.exp(
        params.gamma0
        + cov.weighted_sum(params.gamma_x)
        + params.gamma_y * params.proximity(distance_to_points(region, y_pts))
    )

    mask_flat = omega.mask.ravel()
    base_omega = np.where(mask_flat, base.ravel(), 0.0)
    base_mass = base_omega.sum() * region.cell_area
    d_fact_flat = d_fact.ravel()
    xs, ys = region.cell_centers()
    cell_x = np.tile(xs, region.ny)
    cell_y = np.repeat(ys, region.nx)
    dx_cell = region.width / region.nx
    dy_cell = region.height / region.ny
    x0, y0, _, _ = region.bounds

    counts = np.empty(replications, dtype=int)
    done = 0
    chunk_id = 0
    while done < replications:
        b = min(chunk, replications - done)
        rng = rng_for(seed, "oracle", t, chunk_id)
        # Redraw Z_t from h: counts, cells, jittered positions.
        n_new = rng.poisson(h_total, b) if h_total > 0 else np.zeros(b, dtype=int)
        kmax = int(n_new.max()) if b else 0
        if kmax == 0 or h_total <= 0:
            # No new points anywhere in the chunk: the factual proximity is
            # the whole story, so integrate the exact field.
            lam_field = base_omega * np.exp(
                params.gamma_z * params.proximity(d_fact_flat)
            )
            lam = lam_field.sum() * region.cell_area
            counts[done : done + b] = rng.poisson(lam, b)
        else:
            total_pts = int(n_new.sum())
            cells = _sample_cells(h_flat, rng, total_pts)
            rows, cols = np.divmod(cells, region.nx)
            px_all = x0 + (cols + rng.random(total_pts)) * dx_cell
            py_all = y0 + (rows + rng.random(total_pts)) * dy_cell
            px = np.full((b, kmax), np.inf)
            py = np.full((b, kmax), np.inf)
            owner = np.repeat(np.arange(b), n_new)
            slot = np.concatenate([np.arange(n) for n in n_new]) if total_pts else np.array([], dtype=int)
            px[owner, slot] = px_all
            py[owner, slot] = py_all

            # Importance subsample of omega cells, proportional to the base
            # factor; fresh per chunk so the subsampling error averages out.
            s_idx = _sample_cells(base_omega, rng, integral_cells)
            sx, sy = cell_x[s_idx], cell_y[s_idx]
            d2 = (
                (px.reshape(-1, 1) - sx[None, :]) ** 2
                + (py.reshape(-1, 1) - sy[None, :]) ** 2
            ).reshape(b, kmax, integral_cells)
            d_new = np.sqrt(d2.min(axis=1))
            d_comb = np.minimum(d_new, d_fact_flat[s_idx][None, :])
            boost = np.exp(params.gamma_z * params.proximity(d_comb))
            lam_hat = base_mass * boost.mean(axis=1)
            counts[done : done + b] = rng.poisson(lam_hat)
        done += b
        chunk_id += 1
    return counts


def _oracle_counts_general(
    dataset: Dataset,
    spec: InterventionSpec,
    omega: CellRegion,
    t: int,
    replications: int,
    seed: int,
) -> np.ndarray:
    """Per-replication window re-simulation for arbitrary M (exact fields)."""
    region = dataset.region
    params = dataset.gen_params
    cov = dataset.covariates
    M = spec.M
    start = t - M + 1
    counts = np.empty(replications, dtype=int)
    for r in range(replications):
        rng = rng_for(seed, "oracle", t, "rep", r)
        sim_z: dict[int, PointPattern] = {}
        sim_y: dict[int, PointPattern] = {}

        def z_at(j: int) -> PointPattern:
            return sim_z[j] if j >= start else dataset.treatments[j - 1]

        def y_at(j: int) -> PointPattern | None:
            if j < 1:
                return None
            return sim_y[j] if j >= start else dataset.outcomes[j - 1]

        for j in range(start, t + 1):
            sim_z[j] = sample_pattern_inverse(
                spec.fields[j - 1], rng, j, KIND_TREATMENT
            )
            window = [z_at(i) for i in range(max(1, j - TREATMENT_WINDOW), j + 1)]
            lam_y = outcome_intensity(region, cov, window, y_at(j - 1), params)
            if j < t:
                sim_y[j] = sample_pattern_inverse(lam_y, rng, j, KIND_OUTCOME)
            else:
                counts[r] = sample_pattern_inverse(lam_y, rng, j, KIND_OUTCOME).count_in(omega)
    return counts
