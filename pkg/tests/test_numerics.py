"""
Tests for the numeric primitives and classification metrics.
"""

import sys
from pathlib import Path

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))

import numpy as np
import pandas as pd
import pytest
from skewbench.errors import InvalidArgumentError
from skewbench.utils import calculate_metrics, evaluate_predictions
from skewbench.utils.metrics import per_class_error, top_k_error
from skewbench.utils.numerics import (angle_deg, column_norms, cross_entropy, relative_error, softmax,
                                      unit_rows)


class TestSoftmax:
    """Tests for the stable softmax."""

    def test_symmetric_logits(self):
        """Equal logits give a uniform distribution."""
        np.testing.assert_allclose(softmax([0.0, 0.0]), [0.5, 0.5], atol=1e-15)

    def test_exact_exponent(self):
        """Logits (0, ln 3) give (1/4, 3/4)."""
        np.testing.assert_allclose(softmax([0.0, np.log(3.0)]), [0.25, 0.75], atol=1e-15)

    def test_large_logits_do_not_overflow(self):
        """Shift invariance keeps huge logits finite."""
        with np.errstate(over='raise'):
            np.testing.assert_allclose(softmax([1000.0, 1000.0]), [0.5, 0.5])

    def test_batch_rows_sum_to_one(self):
        """Every row of a batch is a distribution."""
        z = np.random.default_rng(0).normal(scale=20, size=(50, 7))
        p = softmax(z)
        assert p.shape == z.shape
        assert np.all(p >= 0)
        np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)

    def test_empty_and_non_finite_rejected(self):
        """Empty or non-finite logits are invalid."""
        with pytest.raises(InvalidArgumentError):
            softmax([])
        with pytest.raises(InvalidArgumentError):
            softmax([0.0, np.nan])
        with pytest.raises(InvalidArgumentError):
            softmax([np.inf, 0.0])


class TestCrossEntropy:
    """Tests for the negative log-likelihood."""

    def test_uniform_pair(self):
        """-ln 0.5 for an uninformed binary prediction."""
        assert cross_entropy([0.5, 0.5], 0) == pytest.approx(0.693147, abs=1e-6)

    def test_confident_prediction(self):
        """A perfect prediction costs nothing."""
        eps = 1e-300
        assert cross_entropy([1.0 - eps, eps], 0) == pytest.approx(0.0, abs=1e-15)

    def test_second_class(self):
        """-ln 0.75 for the second class."""
        assert cross_entropy([0.25, 0.75], 1) == pytest.approx(0.287682, abs=1e-6)

    def test_batch(self):
        """Batches return one value per row."""
        p = np.array([[0.5, 0.5], [0.25, 0.75]])
        np.testing.assert_allclose(cross_entropy(p, np.array([0, 1])), [np.log(2), np.log(4 / 3)])

    def test_index_out_of_range(self):
        """Class indices must be inside [0, K)."""
        with pytest.raises(InvalidArgumentError):
            cross_entropy([0.5, 0.5], 2)
        with pytest.raises(InvalidArgumentError):
            cross_entropy([0.5, 0.5], -1)


class TestAngles:
    """Tests for angle computations."""

    def test_orthogonal(self):
        """Unit axes are 90 degrees apart."""
        assert angle_deg([1, 0], [0, 1]) == pytest.approx(90.0)

    def test_identity(self):
        """A vector makes no angle with itself."""
        u = np.array([0.3, -1.2, 4.0])
        assert angle_deg(u, u) == 0.0

    def test_positive_multiple(self):
        """A positive multiple of a vector makes exactly zero angle with it."""
        rng = np.random.default_rng(17)
        for _ in range(1000):
            u = rng.normal(size=5)
            for c in (3.0, 0.1, 7.3e4):
                assert angle_deg(c * u, u) == 0.0

    def test_near_parallel_precision(self):
        """Small angles keep full precision."""
        t = 1e-9
        assert angle_deg([1.0, 0.0], [np.cos(t), np.sin(t)]) == pytest.approx(np.degrees(t), rel=1e-9)

    def test_opposite(self):
        """Opposite vectors are 180 degrees apart."""
        assert angle_deg([1.0, 2.0], [-2.0, -4.0]) == pytest.approx(180.0)

    def test_diagonal(self):
        """(1,1) and (1,0) are 45 degrees apart."""
        assert angle_deg([1, 1], [1, 0]) == pytest.approx(45.0)

    def test_range_and_symmetry(self):
        """Angles lie in [0, 180] and do not depend on argument order."""
        rng = np.random.default_rng(3)
        for _ in range(100):
            u, v = rng.normal(size=4), rng.normal(size=4)
            a = angle_deg(u, v)
            assert 0.0 <= a <= 180.0
            assert a == pytest.approx(angle_deg(v, u))

    def test_zero_vector(self):
        """The angle to a zero vector is undefined."""
        with pytest.raises(InvalidArgumentError):
            angle_deg([0, 0], [1, 0])

    def test_unit_rows_drops_zero_rows(self):
        """Zero rows are masked out, the rest normalized."""
        units, mask = unit_rows(np.array([[3.0, 4.0], [0.0, 0.0], [0.0, 2.0]]))
        assert mask.tolist() == [True, False, True]
        np.testing.assert_allclose(units, [[0.6, 0.8], [0.0, 1.0]])

    def test_column_norms(self):
        """Norms are taken per column."""
        np.testing.assert_allclose(column_norms([[3.0, 0.0], [4.0, 2.0]]), [5.0, 2.0])

    def test_relative_error_floor(self):
        """Tiny values are compared against the floor."""
        assert relative_error(0.0, 1e-9)[()] == pytest.approx(1e-3)
        assert relative_error(1.0, 1.0)[()] == 0.0


class TestMetrics:
    """Tests for classification metrics."""

    def test_calculate_metrics(self):
        """Top-1, balanced and per-class error of a small score matrix."""
        y_true = np.array([0, 0, 1, 2])
        scores = np.array([[0.9, 0.1, 0.0],
                           [0.2, 0.7, 0.1],
                           [0.1, 0.8, 0.1],
                           [0.3, 0.3, 0.4]])
        metrics = calculate_metrics(y_true, scores)

        assert 'top1_error' in metrics
        assert 'top5_error' in metrics
        assert metrics['top1_error'] == pytest.approx(0.25)
        assert metrics['top5_error'] == 0.0
        assert metrics['per_class_error'] == [0.5, 0.0, 0.0]
        assert metrics['balanced_error'] == pytest.approx(0.5 / 3)

    def test_absent_class_is_null(self):
        """Classes without samples report no error."""
        metrics = calculate_metrics(np.array([0, 0]), np.array([[1.0, 0.0], [0.0, 1.0]]))
        assert metrics['per_class_error'] == [0.5, None]
        assert metrics['balanced_error'] == pytest.approx(0.5)

    def test_top_k_error(self):
        """Top-2 counts a hit when the true class is second best."""
        y_true = np.array([0, 1, 2])
        scores = np.array([[0.1, 0.5, 0.4, 0.0],
                           [0.0, 0.3, 0.2, 0.7],
                           [0.0, 0.0, 1.0, 0.0]])
        assert top_k_error(y_true, scores, 1) == pytest.approx(2 / 3)
        assert top_k_error(y_true, scores, 2) == pytest.approx(1 / 3)

    def test_per_class_error(self):
        """Errors are computed class by class."""
        errors = per_class_error(np.array([0, 1, 1, 1]), np.array([0, 1, 0, 0]), 3)
        assert errors[0] == 0.0
        assert errors[1] == pytest.approx(2 / 3)
        assert np.isnan(errors[2])

    def test_evaluate_predictions(self):
        """Per-sample frame with margin and correctness."""
        y_true = np.array([0, 1])
        scores = np.array([[2.0, 1.0], [3.0, 0.5]])
        eval_df = evaluate_predictions(y_true, scores)

        assert isinstance(eval_df, pd.DataFrame)
        assert len(eval_df) == 2
        assert 'actual' in eval_df.columns
        assert 'predicted' in eval_df.columns
        assert eval_df['correct'].tolist() == [1, 0]
        assert eval_df['margin'].tolist() == [1.0, -2.5]
