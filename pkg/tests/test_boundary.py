"""
Tests for weight re-scaling and decision-boundary geometry.
"""

import sys
from pathlib import Path

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))

import numpy as np
import pytest
from scipy.optimize import brentq
from skewbench.data import Dataset
from skewbench.errors import DegenerateGeometryError, InvalidArgumentError
from skewbench.models import (Model, RescaleSpec, boundary_angle_2d, boundary_residual, norm_profile,
                              radial_derivative, rescale, wvn_project)
from skewbench.models.boundary import (BoundaryQuery, pairwise_preference_flips, radial_derivative_profile,
                                       rescale_model)


def class_loss(model, X, y):
    return model.backward(X, y).loss


class TestRescale:
    """Tests for post-hoc re-scaling."""

    def test_gamma_zero_identity(self):
        """gamma=0 returns the weights bit for bit."""
        W = np.random.default_rng(0).normal(size=(4, 3))
        out = rescale(W, RescaleSpec(0.0, [100, 10, 1]))
        np.testing.assert_array_equal(out, W)
        assert out is not W

    def test_factor_values(self):
        """Ratio 100 gives 100^0.1 at gamma 0.1 and 100 at gamma 1."""
        assert RescaleSpec(0.1, [100, 1]).factors()[1] == pytest.approx(1.584893, abs=1e-6)
        assert RescaleSpec(1.0, [100, 1]).factors()[1] == pytest.approx(100.0)
        assert RescaleSpec(1.0, [100, 1]).factors()[0] == 1.0

    def test_factors_non_increasing_in_count(self):
        """Rarer classes never get smaller factors."""
        rng = np.random.default_rng(1)
        for _ in range(100):
            counts = rng.integers(1, 5000, size=8)
            factors = RescaleSpec(float(rng.uniform(0, 2)), counts).factors()
            order = np.argsort(counts)
            assert np.all(np.diff(factors[order]) <= 0)

    def test_columns_scaled(self):
        """Column i is multiplied by its own factor."""
        W = np.ones((2, 3))
        out = rescale(W, RescaleSpec(1.0, [40, 20, 10]))
        np.testing.assert_allclose(out, [[1.0, 2.0, 4.0], [1.0, 2.0, 4.0]])

    def test_rescale_model_copies(self):
        """The source model is left untouched."""
        model = Model.init(3, [4], 2, 3, seed=1)
        before = model.classifier.copy()
        scaled = rescale_model(model, RescaleSpec(0.5, [9, 3, 1]))
        np.testing.assert_array_equal(model.classifier, before)
        np.testing.assert_allclose(scaled.classifier, before * [1.0, np.sqrt(3), 3.0])

    def test_invalid(self):
        """Counts must be positive and gamma nonnegative."""
        with pytest.raises(InvalidArgumentError):
            RescaleSpec(0.1, [10, 0])
        with pytest.raises(InvalidArgumentError):
            RescaleSpec(-0.1, [10, 1])
        with pytest.raises(InvalidArgumentError):
            rescale(np.ones((2, 3)), RescaleSpec(0.1, [10, 1]))

    def test_preference_flips_only_toward_rare(self):
        """Re-scaling never moves a preference toward the more frequent class."""
        rng = np.random.default_rng(2)
        violations = 0
        for _ in range(200):
            counts = rng.integers(1, 1000, size=5)
            scores = rng.uniform(0, 3, size=(10, 5))
            violations += pairwise_preference_flips(scores, counts, float(rng.uniform(0, 1.5)))
        assert violations == 0


class TestBoundary:
    """Tests for boundary residuals and angles."""

    def test_bisector_residual(self):
        """Equal norms put the bisector on the boundary."""
        query = BoundaryQuery(0, 1, np.array([2.0, 0.0]), np.array([0.0, 2.0]))
        assert boundary_residual(query, [1.0, 1.0]) == pytest.approx(0.0, abs=1e-15)

    def test_residual_value(self):
        """w_i=(2,0), w_j=(0,1), f on the diagonal: residual sqrt(2)/2."""
        query = BoundaryQuery(0, 1, np.array([2.0, 0.0]), np.array([0.0, 1.0]))
        assert boundary_residual(query, np.array([1.0, 1.0]) / np.sqrt(2)) == pytest.approx(np.sqrt(2) / 2)

    def test_residual_sign_matches_argmax(self):
        """Positive residual means class i wins the pair."""
        rng = np.random.default_rng(4)
        W = rng.normal(size=(3, 2))
        query = BoundaryQuery.from_classifier(W, 0, 1)
        for f in rng.uniform(0, 1, size=(100, 3)):
            logits = f @ W
            assert (boundary_residual(query, f) > 0) == (logits[0] > logits[1])

    def test_zero_feature(self):
        """The residual of a zero feature is undefined."""
        query = BoundaryQuery(0, 1, np.array([1.0, 0.0]), np.array([0.0, 1.0]))
        with pytest.raises(InvalidArgumentError):
            boundary_residual(query, [0.0, 0.0])

    def test_equal_norms_angle(self):
        """Equal norms at 90 degrees split the angle in half."""
        assert abs(boundary_angle_2d([1.0, 0.0], [0.0, 1.0]) - 45.0) < 1e-9

    def test_double_norm_angle(self):
        """Doubling w_i moves the boundary to arctan 2 from w_i."""
        expected = np.degrees(brentq(lambda t: 2 * np.cos(t) - np.cos(np.pi / 2 - t), 0, np.pi / 2, xtol=1e-14))
        assert expected == pytest.approx(63.4349, abs=1e-4)
        assert abs(boundary_angle_2d([2.0, 0.0], [0.0, 1.0]) - expected) < 1e-6

    def test_angle_increases_with_norm_ratio(self):
        """Larger norm ratios push the boundary away from w_i."""
        for w_j in ([0.0, 1.0], [np.cos(2.0), np.sin(2.0)]):
            angles = [boundary_angle_2d([s, 0.0], w_j) for s in (1, 2, 4, 8)]
            assert np.all(np.diff(angles) > 0)

    def test_higher_dimensions(self):
        """The angle is measured in the plane of the two vectors."""
        angle = boundary_angle_2d([1.0, 0.0, 0.0], [0.0, 0.0, 1.0])
        assert abs(angle - 45.0) < 1e-9

    def test_parallel_vectors(self):
        """Parallel columns have no boundary ray between them."""
        with pytest.raises(DegenerateGeometryError):
            boundary_angle_2d([1.0, 1.0], [2.0, 2.0])


class TestNormProfile:
    """Tests for relative norms."""

    def test_equal_norms(self):
        """Equal norms are all 1."""
        np.testing.assert_allclose(norm_profile(np.eye(3) * 2.0), 1.0)

    def test_known_profile(self):
        """Norms (2, 1, 1) relative to their mean."""
        np.testing.assert_allclose(norm_profile(np.diag([2.0, 1.0, 1.0])), [1.5, 0.75, 0.75])

    def test_after_wvn(self):
        """Normalized classifiers have a flat profile."""
        W = wvn_project(np.random.default_rng(0).normal(size=(4, 6)))
        np.testing.assert_allclose(norm_profile(W), 1.0, atol=1e-12)


class TestRadialDerivative:
    """Tests for the loss derivative along a weight vector."""

    def test_saturated(self):
        """A saturated class has zero derivative along its own vector."""
        model = Model([], 1000.0 * np.eye(2))
        X = np.array([[1.0, 0.0], [2.0, 0.1]])
        assert radial_derivative(model, X, 0, labels=[0, 0]) == pytest.approx(0.0, abs=1e-300)

    def test_orthogonal_features(self):
        """Features orthogonal to w_k give zero."""
        model = Model([], np.array([[1.0, 0.0], [0.0, 1.0]]))
        X = np.array([[3.0, 0.0], [0.5, 0.0]])
        assert radial_derivative(model, X, 1, labels=[0, 0]) == 0.0

    def test_matches_finite_difference(self):
        """The formula matches scaling w_k by 1 +- h."""
        rng = np.random.default_rng(6)
        h = 1e-6
        for _ in range(20):
            model = Model.init(3, [5], 4, 3, seed=int(rng.integers(2 ** 31)))
            X = rng.normal(size=(8, 3))
            y = np.full(8, int(rng.integers(3)))
            k = int(rng.integers(3))
            norm_k = np.linalg.norm(model.classifier[:, k])
            plus, minus = model.copy(), model.copy()
            plus.classifier[:, k] *= 1 + h
            minus.classifier[:, k] *= 1 - h
            numeric = (class_loss(plus, X, y) - class_loss(minus, X, y)) / (2 * h * norm_k)
            assert abs(radial_derivative(model, X, k, labels=y) - numeric) < 1e-5

    def test_empty_subset(self):
        """An empty subset has no derivative."""
        model = Model([], np.eye(2))
        with pytest.raises(InvalidArgumentError):
            radial_derivative(model, np.zeros((0, 2)), 0, labels=[])

    def test_profile(self):
        """The profile evaluates every class on its own samples."""
        model = Model.init(2, [], 2, 3, seed=0)
        d = Dataset(np.abs(np.random.default_rng(0).normal(size=(6, 2))), [0, 0, 1, 1, 1, 0], 3)
        profile = radial_derivative_profile(model, d)
        assert profile[0] == pytest.approx(radial_derivative(model, d.X[d.y == 0], 0, labels=[0, 0, 0]))
        assert np.isnan(profile[2])
