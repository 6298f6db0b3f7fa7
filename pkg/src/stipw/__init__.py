"""Counterfactual outcome estimation for spatial-temporal point patterns.

Inverse probability weighting over point-pattern series: reduced-count
Poisson propensities, Monte Carlo counterfactual probabilities, per-step
outcome intensity fits, and a seeded synthetic benchmark with a brute-force
ground-truth oracle.
"""

from .geometry import AlignmentError, CellRegion, Polyline, Region
from .point_process import (
    IntensityField,
    PointPattern,
    integrate_intensity,
    poisson_log_pmf,
    sample_pattern,
)
from .synthetic import (
    CovariateSet,
    Dataset,
    GenParams,
    GroundTruth,
    InterventionSpec,
    build_covariates,
    default_roads,
    ground_truth,
    intervene,
    outcome_intensity,
    simulate_series,
    treatment_intensity,
)

__all__ = [
    "AlignmentError",
    "CellRegion",
    "CovariateSet",
    "Dataset",
    "GenParams",
    "GroundTruth",
    "IntensityField",
    "InterventionSpec",
    "PointPattern",
    "Polyline",
    "Region",
    "build_covariates",
    "default_roads",
    "ground_truth",
    "integrate_intensity",
    "intervene",
    "outcome_intensity",
    "poisson_log_pmf",
    "sample_pattern",
    "simulate_series",
    "treatment_intensity",
]

__version__ = "0.1.0"
