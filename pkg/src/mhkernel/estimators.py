"""Scikit-learn compatible estimators for singular-kernel smoothing.

These wrap the functional core in :mod:`mhkernel.smoothing` behind the
usual ``fit``/``predict`` surface so the smoother composes with
pipelines, grid search and the rest of the ecosystem.  Prediction at a
query point is exactly the scalar estimator: training is memorization.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .geometry import Euclidean, Sphere
from .smoothing import (
    COINCIDENCE_TOL,
    KernelSpec,
    _margin_from_distances,
    _regress_from_distances,
)

_MANIFOLDS = ("sphere", "euclidean")


def _resolve_manifold(name: str, n_features: int):
    if name == "sphere":
        if n_features < 2:
            raise ValueError("sphere data needs at least 2 ambient coordinates")
        return Sphere(n_features - 1)
    if name == "euclidean":
        return Euclidean(n_features)
    raise ValueError(f"manifold must be one of {_MANIFOLDS}, got {name!r}")


class _KernelSmootherBase(BaseEstimator):
    def __init__(self, exponent=None, manifold="sphere", coincidence_tol=COINCIDENCE_TOL):
        self.exponent = exponent
        self.manifold = manifold
        self.coincidence_tol = coincidence_tol

    def _fit_kernel(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        manifold = _resolve_manifold(self.manifold, X.shape[1])
        X = manifold.validate_points(X)
        if self.exponent is None:
            kernel = KernelSpec.manifold_hilbert(manifold)
        else:
            kernel = KernelSpec.power_law(manifold, self.exponent)
        self.X_ = X
        self.y_ = np.asarray(y, dtype=float)
        self.kernel_ = kernel
        self.n_features_in_ = X.shape[1]
        return self

    def _query_matrix(self, X) -> np.ndarray:
        check_is_fitted(self, "kernel_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, but the estimator was fitted with "
                f"{self.n_features_in_}"
            )
        return self.kernel_.manifold.validate_points(X)


class KernelSmoothingRegressor(RegressorMixin, _KernelSmootherBase):
    """Interpolating kernel smoothing regression with a singular
    power-law kernel.

    The prediction at a query is the kernel-weighted average of training
    labels, except that a query coinciding with a training point returns
    that training label exactly, whatever the noise level.

    Parameters
    ----------
    exponent : float or None, default=None
        Kernel exponent q < 0 applied to the distance.  ``None`` selects
        q = -d for data on a d-dimensional manifold, the choice whose
        weighted hyperplane-arrangement ensemble realizes the same
        predictions on the sphere.
    manifold : {"sphere", "euclidean"}, default="sphere"
        Geometry of the input rows.  Sphere data are unit vectors in
        R^(d+1) measured by arc length; Euclidean data use the l2 metric.
    coincidence_tol : float, default=1e-12
        Distance at or below which a query counts as equal to a training
        point.

    Attributes
    ----------
    X_ : ndarray of shape (n_samples, n_features)
        Validated (and, on the sphere, normalized) training points.
    y_ : ndarray of shape (n_samples,)
        Training labels.
    kernel_ : KernelSpec
        Resolved kernel.
    """

    def fit(self, X, y):
        return self._fit_kernel(X, y)

    def predict(self, X):
        X = self._query_matrix(X)
        values = np.empty(X.shape[0])
        for j, row in enumerate(X):
            dists = self.kernel_.distances(row, self.X_)
            values[j] = _regress_from_distances(
                dists, self.y_, self.kernel_.exponent, self.coincidence_tol
            ).value
        return values


class KernelSmoothingClassifier(ClassifierMixin, _KernelSmootherBase):
    """Interpolating ensemble classifier: the sign of the singular-kernel
    weighted label sum.

    Labels must be +-1.  ``decision_function`` returns the margin
    rescaled per query by the positive factor delta^(-q) (delta being the
    closest training distance), so signs are meaningful but magnitudes
    are not comparable across queries; at a coincident query it returns
    the mean of the coincident labels.

    Parameters are identical to :class:`KernelSmoothingRegressor`.
    """

    def fit(self, X, y):
        self._fit_kernel(X, y)
        if not np.all(np.isin(self.y_, (-1.0, 1.0))):
            raise ValueError("classification labels must be +-1")
        self.classes_ = np.unique(self.y_)
        return self

    def decision_function(self, X):
        X = self._query_matrix(X)
        margins = np.empty(X.shape[0])
        for j, row in enumerate(X):
            dists = self.kernel_.distances(row, self.X_)
            margins[j] = _margin_from_distances(
                dists, self.y_, self.kernel_.exponent, self.coincidence_tol
            )
        return margins

    def predict(self, X):
        margins = self.decision_function(X)
        return np.where(margins >= 0.0, 1.0, -1.0)
