"""Posterior sampling and set-valued inference on impulse responses."""

from .bayes import (
    WeightedIrfSample,
    highest_density_region,
    highest_density_regions,
    posterior_irf,
    posterior_mean_range,
    robust_bounds_probability,
)
from .draws import SolvedDraws, as_solved, solve_draws
from .posterior import (
    PosteriorDrawSet,
    credible_region_phi,
    sample_posterior_hsvar,
    sample_posterior_niw,
)
from .projection import (
    ClusteredDrawSet,
    ProjectionConfidenceSet,
    anchored_member_labels,
    cluster_draws,
    merge_intervals,
    projection_cs_fixed,
    projection_cs_switching,
)

__all__ = [
    "ClusteredDrawSet",
    "PosteriorDrawSet",
    "ProjectionConfidenceSet",
    "SolvedDraws",
    "WeightedIrfSample",
    "anchored_member_labels",
    "as_solved",
    "cluster_draws",
    "credible_region_phi",
    "highest_density_region",
    "highest_density_regions",
    "merge_intervals",
    "posterior_irf",
    "posterior_mean_range",
    "projection_cs_fixed",
    "projection_cs_switching",
    "robust_bounds_probability",
    "sample_posterior_hsvar",
    "sample_posterior_niw",
    "solve_draws",
]
