import math

import numpy as np
import pytest
from sklearn.base import clone

from mhkernel.data import LabeledDataset
from mhkernel.estimators import KernelSmoothingClassifier, KernelSmoothingRegressor
from mhkernel.rng import RngStream
from mhkernel.smoothing import ensemble_classify, kernel_smooth_regress


def sphere_data(seed, n):
    gen = RngStream(seed).generator()
    X = gen.standard_normal((n, 3))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    y = gen.standard_normal(n)
    return X, y


def sphere_classes(seed, n):
    X, _ = sphere_data(seed, n)
    y = np.where(RngStream(seed + 1).generator().random(n) < 0.5, 1.0, -1.0)
    return X, y


class TestSklearnApi:
    def test_get_set_params_roundtrip(self):
        reg = KernelSmoothingRegressor(exponent=-3.0, manifold="euclidean")
        params = reg.get_params()
        assert params["exponent"] == -3.0 and params["manifold"] == "euclidean"
        reg.set_params(exponent=-1.0)
        assert reg.exponent == -1.0

    def test_clone(self):
        reg = KernelSmoothingRegressor(exponent=-2.0)
        X, y = sphere_data(1, 20)
        reg.fit(X, y)
        fresh = clone(reg)
        assert fresh.exponent == -2.0
        assert not hasattr(fresh, "X_")

    def test_unfitted_predict_raises(self):
        with pytest.raises(Exception):
            KernelSmoothingRegressor().predict([[0.0, 0.0, 1.0]])

    def test_feature_count_checked(self):
        X, y = sphere_data(2, 10)
        reg = KernelSmoothingRegressor().fit(X, y)
        with pytest.raises(ValueError):
            reg.predict(np.eye(4))

    def test_unknown_manifold_rejected(self):
        X, y = sphere_data(3, 5)
        with pytest.raises(ValueError):
            KernelSmoothingRegressor(manifold="torus").fit(X, y)

    def test_positive_exponent_rejected(self):
        X, y = sphere_data(4, 5)
        with pytest.raises(ValueError):
            KernelSmoothingRegressor(exponent=2.0).fit(X, y)

    def test_non_unit_sphere_rows_rejected(self):
        with pytest.raises(ValueError):
            KernelSmoothingRegressor().fit([[0.0, 0.0, 2.0]], [1.0])


class TestRegressorPredictions:
    def test_default_exponent_is_minus_dim(self):
        X, y = sphere_data(5, 15)
        reg = KernelSmoothingRegressor().fit(X, y)
        assert reg.kernel_.exponent == -2.0

    def test_interpolates_training_points_exactly(self):
        X, y = sphere_data(6, 40)
        reg = KernelSmoothingRegressor().fit(X, y)
        assert np.array_equal(reg.predict(X), y)

    def test_matches_functional_core_bitwise(self):
        X, y = sphere_data(7, 25)
        reg = KernelSmoothingRegressor().fit(X, y)
        # the functional core sees the estimator's validated training set
        data = LabeledDataset(reg.X_, reg.y_)
        queries = reg.kernel_.manifold.validate_points(sphere_data(8, 30)[0])
        predictions = reg.predict(queries)
        for j, q in enumerate(queries):
            assert predictions[j] == kernel_smooth_regress(q, data, reg.kernel_).value

    def test_euclidean_hand_computed(self):
        # two 1-d points, q = -1: query 0.25 gets weights 1 and 1/3
        reg = KernelSmoothingRegressor(manifold="euclidean").fit([[0.0], [1.0]], [0.0, 1.0])
        assert reg.predict([[0.25]])[0] == pytest.approx(0.25, abs=1e-15)


class TestClassifier:
    def test_predicts_signs(self):
        X, y = sphere_classes(9, 30)
        clf = KernelSmoothingClassifier().fit(X, y)
        out = clf.predict(X)
        assert np.array_equal(out, y)
        assert set(np.unique(out)) <= {-1.0, 1.0}

    def test_decision_function_sign_matches_predict(self):
        X, y = sphere_classes(10, 20)
        clf = KernelSmoothingClassifier().fit(X, y)
        queries, _ = sphere_data(11, 50)
        margins = clf.decision_function(queries)
        assert np.array_equal(np.where(margins >= 0, 1.0, -1.0), clf.predict(queries))

    def test_matches_functional_classifier(self):
        X, y = sphere_classes(12, 15)
        clf = KernelSmoothingClassifier().fit(X, y)
        data = LabeledDataset(X, y)
        queries, _ = sphere_data(13, 40)
        predictions = clf.predict(queries)
        for j, q in enumerate(queries):
            assert predictions[j] == ensemble_classify(q, data, clf.kernel_)

    def test_rejects_non_sign_labels(self):
        X, _ = sphere_data(14, 10)
        with pytest.raises(ValueError):
            KernelSmoothingClassifier().fit(X, np.linspace(0, 1, 10))

    def test_classes_attribute(self):
        X, y = sphere_classes(15, 30)
        clf = KernelSmoothingClassifier().fit(X, y)
        assert np.array_equal(clf.classes_, np.unique(y))

    def test_score_is_perfect_on_training_data(self):
        X, y = sphere_classes(16, 30)
        clf = KernelSmoothingClassifier().fit(X, y)
        assert clf.score(X, y) == 1.0


class TestEuclideanRegressor:
    def test_interpolation_on_plane(self):
        gen = RngStream(17).generator()
        X = gen.standard_normal((20, 2))
        y = gen.standard_normal(20)
        reg = KernelSmoothingRegressor(manifold="euclidean").fit(X, y)
        assert np.array_equal(reg.predict(X), y)

    def test_midpoint_of_symmetric_pair(self):
        reg = KernelSmoothingRegressor(manifold="euclidean").fit(
            [[-1.0, 0.0], [1.0, 0.0]], [0.0, 4.0]
        )
        assert reg.predict([[0.0, 0.0]])[0] == pytest.approx(2.0, abs=1e-12)
