"""Kernel smoothing regression and classification with singular
power-law kernels over a distance.

The regressor has three branches: at a query coinciding with a training
point it returns that point's label (the kernel is +inf there, so the
estimator interpolates); at positive kernel mass it returns the
kernel-weighted label average; and when the kernel sum vanishes it
returns 0.  The classifier is the sign of the same weighted sum, with
sgn taken on the extended reals and sgn(0) := +1.

Numerics: the weighted average is computed with weights
(dist_i / delta)^q where delta is the smallest distance, so the common
factor delta^q cancels instead of overflowing (dist^q alone overflows
double precision near delta ~ 1e-78 for q = -4).  Sums use
``math.fsum``, which is exactly rounded, so estimates are bit-for-bit
invariant under dataset reordering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import LabeledDataset
from .geometry import Euclidean, Sphere, SpherePoint
from .kernels import WrpConfig

# Query and training point count as coincident at or below this distance;
# the exact-equality branch of the estimator needs a tolerance for floats.
COINCIDENCE_TOL = 1e-12

INTERPOLATION = "interpolation"
RATIO = "ratio"
ZERO_DENOMINATOR = "zero-denominator"


@dataclass(frozen=True)
class KernelSpec:
    """A singular power-law kernel dist^exponent (exponent < 0, +inf at
    zero distance) over a manifold's metric."""

    manifold: Sphere | Euclidean
    exponent: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.exponent) and self.exponent < 0.0):
            raise ValueError("exponent must be a finite negative number")

    @classmethod
    def manifold_hilbert(cls, manifold: Sphere | Euclidean) -> "KernelSpec":
        """dist^(-d): the exponent matched to the manifold dimension."""
        return cls(manifold, -float(manifold.dim))

    @classmethod
    def from_arrangement_config(cls, cfg: WrpConfig) -> "KernelSpec":
        """Closed form of the hyperplane-arrangement ensemble kernel:
        angle^q on the sphere the configuration lives on."""
        return cls(Sphere(cfg.dim), cfg.q)

    @classmethod
    def power_law(cls, manifold: Sphere | Euclidean, exponent: float) -> "KernelSpec":
        return cls(manifold, float(exponent))

    def evaluate(self, dist: float) -> float:
        """Kernel value at a distance: +inf at 0, else dist^exponent."""
        if dist < 0.0:
            raise ValueError("distance must be nonnegative")
        if dist == 0.0:
            return math.inf
        return dist**self.exponent

    def distances(self, x, points: np.ndarray) -> np.ndarray:
        coords = x.coords if isinstance(x, SpherePoint) else np.asarray(x, dtype=float)
        return self.manifold.distances(coords, points)


@dataclass(frozen=True)
class RegressionEstimate:
    """A smoothed value together with the branch that produced it."""

    value: float
    branch: str


def _regress_from_distances(
    dists: np.ndarray,
    labels: np.ndarray,
    exponent: float,
    tol: float = COINCIDENCE_TOL,
) -> RegressionEstimate:
    coincident = dists <= tol
    if coincident.any():
        # Several coincident training points with different labels is a
        # probability-zero event; averaging them keeps the estimate
        # permutation-invariant and reduces to the single label otherwise.
        hits = labels[coincident]
        return RegressionEstimate(math.fsum(hits) / hits.size, INTERPOLATION)
    delta = float(dists.min())
    weights = (dists / delta) ** exponent
    denominator = math.fsum(weights)
    if denominator == 0.0:
        return RegressionEstimate(0.0, ZERO_DENOMINATOR)
    numerator = math.fsum(labels * weights)
    return RegressionEstimate(numerator / denominator, RATIO)


def _margin_from_distances(
    dists: np.ndarray,
    labels: np.ndarray,
    exponent: float,
    tol: float = COINCIDENCE_TOL,
) -> float:
    """Classification margin, rescaled by the positive factor delta^(-q);
    the sign is that of sum_i y_i * dist_i^q.  At a coincident query the
    infinite kernel terms dominate, so the margin reduces to the sum of
    the coincident labels."""
    coincident = dists <= tol
    if coincident.any():
        return math.fsum(labels[coincident])
    delta = float(dists.min())
    weights = (dists / delta) ** exponent
    return math.fsum(labels * weights)


def kernel_smooth_regress(x, data: LabeledDataset, kernel: KernelSpec) -> RegressionEstimate:
    """The three-branch kernel smoothing estimate at a query point.

    In the interpolation and ratio branches the value is a convex
    combination of labels, hence lies in [min(y), max(y)].
    """
    if len(data) == 0:
        raise ValueError("dataset is empty")
    dists = kernel.distances(x, data.points)
    return _regress_from_distances(dists, data.labels, kernel.exponent)


def ensemble_classify(x, data: LabeledDataset, kernel: KernelSpec) -> float:
    """Sign of the kernel-weighted label sum, in {-1.0, +1.0}; labels
    must be +-1.  Agrees with the sign of ``kernel_smooth_regress``
    whenever the kernel sum is positive and finite."""
    if len(data) == 0:
        raise ValueError("dataset is empty")
    if not data.has_sign_labels():
        raise ValueError("classification labels must be +-1")
    dists = kernel.distances(x, data.points)
    margin = _margin_from_distances(dists, data.labels, kernel.exponent)
    return 1.0 if margin >= 0.0 else -1.0


def l1_error_estimate(estimates, truth, weights) -> float:
    """Weighted mean absolute error sum_i w_i * |estimate_i - truth_i|.

    With weights proportional to the query density this discretizes the
    integrated L1 distance between the fitted and true regression
    functions.
    """
    est = np.asarray(estimates, dtype=float)
    tru = np.asarray(truth, dtype=float)
    wts = np.asarray(weights, dtype=float)
    if not (est.shape == tru.shape == wts.shape) or est.ndim != 1:
        raise ValueError("estimates, truth and weights must be equal-length vectors")
    if np.any(wts < 0.0):
        raise ValueError("weights must be nonnegative")
    return float(wts @ np.abs(est - tru))
