"""Interpolating singular-kernel smoothing on the sphere, with random
hyperplane-arrangement ensembles.

The library provides sphere/Euclidean geometry (geodesic distance,
exponential and logarithm maps with cut-locus handling), closed-form
singular kernels and their series/weight machinery, Monte Carlo
ensembles of hyperplane-arrangement histogram classifiers, the
kernel smoothing regressor/classifier behind a scikit-learn estimator
API, synthetic data generators with known Bayes risk, and a CLI
experiment suite that verifies the kernel equivalence, interpolation
and consistency behavior at desk scale.
"""

from .data import LabeledDataset, load_csv, save_csv
from .estimators import KernelSmoothingClassifier, KernelSmoothingRegressor
from .geometry import (
    Euclidean,
    Sphere,
    SpherePoint,
    TangentVector,
    antipodal_direction,
    euclidean_distance,
    exp_map,
    geodesic_distance,
    log_map,
)
from .kernels import (
    GeometricPmf,
    SeriesResult,
    WrpConfig,
    generalized_binomial,
    manifold_hilbert_kernel,
    same_cell_probability,
    wrp_kernel_closed_form,
    wrp_kernel_series,
    wrp_weight,
)
from .partitions import (
    HyperplaneArrangement,
    McEstimate,
    cube_partition_cell,
    histogram_score,
    mc_ensemble_margin,
    mc_kernel_estimate,
    passes_variance_guard,
    same_cell,
    sample_arrangement,
    sign_pattern,
)
from .rng import RngStream
from .smoothing import (
    KernelSpec,
    RegressionEstimate,
    ensemble_classify,
    kernel_smooth_regress,
    l1_error_estimate,
)
from .synthdata import (
    LabelModel,
    SphereDistribution,
    bayes_risk,
    sample_dataset,
    sample_labels,
    sample_points,
)

__version__ = "0.1.0"

__all__ = [
    "Euclidean",
    "GeometricPmf",
    "HyperplaneArrangement",
    "KernelSmoothingClassifier",
    "KernelSmoothingRegressor",
    "KernelSpec",
    "LabelModel",
    "LabeledDataset",
    "McEstimate",
    "RegressionEstimate",
    "RngStream",
    "SeriesResult",
    "Sphere",
    "SpherePoint",
    "SphereDistribution",
    "TangentVector",
    "WrpConfig",
    "antipodal_direction",
    "bayes_risk",
    "cube_partition_cell",
    "ensemble_classify",
    "euclidean_distance",
    "exp_map",
    "generalized_binomial",
    "geodesic_distance",
    "histogram_score",
    "kernel_smooth_regress",
    "l1_error_estimate",
    "load_csv",
    "log_map",
    "manifold_hilbert_kernel",
    "mc_ensemble_margin",
    "mc_kernel_estimate",
    "passes_variance_guard",
    "same_cell",
    "same_cell_probability",
    "sample_arrangement",
    "sample_dataset",
    "sample_labels",
    "sample_points",
    "save_csv",
    "sign_pattern",
    "wrp_kernel_closed_form",
    "wrp_kernel_series",
    "wrp_weight",
]
