"""Decision-boundary geometry and post-hoc weight re-scaling

The logit of class k is ``||w_k|| ||f(x)|| cos(theta_k)``, so the boundary
between classes i and j is where ``||w_i|| cos(theta_i) = ||w_j|| cos(theta_j)``.
A larger norm pushes the boundary away from its own weight vector. This
module measures that geometry and re-scales columns by ``(n_max / n_i)^gamma``
to move boundaries back toward the frequent classes.
"""

import logging
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy.optimize import bisect

from ..data.dataset import Dataset, class_subset
from ..errors import DegenerateGeometryError, InvalidArgumentError
from ..utils.numerics import angle_deg, as_real_array, column_norms
from .mlp import Model

logger = logging.getLogger(__name__)

BISECTION_XTOL = 1e-10


@dataclass(frozen=True)
class RescaleSpec:
    """Re-scaling exponent gamma and the training class counts"""

    gamma: float
    class_counts: tuple

    def __post_init__(self):
        counts = tuple(int(c) for c in np.asarray(self.class_counts).reshape(-1))
        if not counts or min(counts) <= 0:
            raise InvalidArgumentError("class counts must all be positive")
        if not np.isfinite(self.gamma) or self.gamma < 0:
            raise InvalidArgumentError(f"gamma must be a finite value >= 0, got {self.gamma}")
        object.__setattr__(self, 'class_counts', counts)

    def factors(self) -> np.ndarray:
        """Per-class multipliers ``(n_max / n_i) ** gamma``."""
        counts = np.asarray(self.class_counts, dtype=np.float64)
        return np.power(counts.max() / counts, float(self.gamma))


def rescale(W: np.ndarray, spec: RescaleSpec) -> np.ndarray:
    """
    Multiply column i of ``W`` by ``(n_max / n_i) ** gamma``.

    Args:
        W: (d, K) classifier
        spec: Re-scaling specification with K counts

    Returns:
        New re-scaled matrix; an exact copy when gamma is 0
    """
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2 or W.shape[1] != len(spec.class_counts):
        raise InvalidArgumentError(f"classifier with {W.shape} columns needs {len(spec.class_counts)} counts")
    if spec.gamma == 0:
        return W.copy()
    return W * spec.factors()[None, :]


def rescale_model(model: Model, spec: RescaleSpec) -> Model:
    """Copy of ``model`` with a re-scaled classifier."""
    scaled = model.copy()
    scaled.classifier = rescale(model.classifier, spec)
    return scaled


@dataclass(frozen=True)
class BoundaryQuery:
    """A pair of classes and their weight vectors"""

    i: int
    j: int
    w_i: np.ndarray
    w_j: np.ndarray

    def __post_init__(self):
        if self.i == self.j:
            raise InvalidArgumentError("a boundary needs two distinct classes")
        w_i = as_real_array(self.w_i, 'w_i', ndim=(1,))
        w_j = as_real_array(self.w_j, 'w_j', ndim=(1,))
        if w_i.shape != w_j.shape:
            raise InvalidArgumentError("weight vectors differ in length")
        if not np.linalg.norm(w_i) or not np.linalg.norm(w_j):
            raise InvalidArgumentError("weight vectors must be nonzero")
        object.__setattr__(self, 'w_i', w_i)
        object.__setattr__(self, 'w_j', w_j)

    @classmethod
    def from_classifier(cls, W: np.ndarray, i: int, j: int) -> 'BoundaryQuery':
        W = np.asarray(W, dtype=np.float64)
        return cls(i, j, W[:, i], W[:, j])


def boundary_residual(query: BoundaryQuery, feature) -> float:
    """
    ``||w_i|| cos(theta_i) - ||w_j|| cos(theta_j)`` for a feature vector.

    Positive means the pair (i, j) is decided for class i; zero means the
    feature lies on the boundary B(i, j).
    """
    f = as_real_array(feature, 'feature', ndim=(1,))
    if f.shape != query.w_i.shape:
        raise InvalidArgumentError("feature length differs from the weight vectors")
    norm = np.linalg.norm(f)
    if norm == 0:
        raise InvalidArgumentError("boundary residual is undefined for a zero feature")
    return float(np.dot(query.w_i - query.w_j, f) / norm)


def boundary_angle_2d(w_i, w_j, xtol: float = BISECTION_XTOL) -> float:
    """
    Angle, from ``w_i``, of the boundary ray lying between ``w_i`` and ``w_j``.

    The ray is searched in the plane spanned by the two vectors by bisection
    on the residual over the angular interval [0, angle(w_i, w_j)].

    Args:
        w_i: Weight vector of class i
        w_j: Weight vector of class j
        xtol: Bisection tolerance in radians

    Returns:
        Angle in degrees between ``w_i`` and the boundary ray
    """
    w_i = as_real_array(w_i, 'w_i', ndim=(1,))
    w_j = as_real_array(w_j, 'w_j', ndim=(1,))
    if w_i.shape != w_j.shape or w_i.shape[0] < 2:
        raise InvalidArgumentError("boundary angle needs two weight vectors of the same dimension >= 2")
    norm_i, norm_j = np.linalg.norm(w_i), np.linalg.norm(w_j)
    if norm_i == 0 or norm_j == 0:
        raise InvalidArgumentError("weight vectors must be nonzero")
    alpha = float(np.radians(angle_deg(w_i, w_j)))
    if np.isclose(np.sin(alpha), 0.0, atol=1e-12):
        raise DegenerateGeometryError("weight vectors are parallel; the boundary is not a ray between them")

    def residual(t: float) -> float:
        return norm_i * np.cos(t) - norm_j * np.cos(alpha - t)

    lo, hi = residual(0.0), residual(alpha)
    if lo == 0:
        return 0.0
    if hi == 0:
        return float(np.degrees(alpha))
    if np.sign(lo) == np.sign(hi):
        raise DegenerateGeometryError(
            f"norm ratio {norm_i / norm_j:.6g} puts the boundary outside the sector between the vectors")
    return float(np.degrees(bisect(residual, 0.0, alpha, xtol=xtol)))


def norm_profile(W: np.ndarray) -> np.ndarray:
    """Relative norms: every column norm divided by the mean column norm."""
    norms = column_norms(W)
    mean = norms.mean()
    if mean == 0:
        raise InvalidArgumentError("all classifier columns are zero")
    return norms / mean


def radial_derivative(model: Model, subset: Union[Dataset, np.ndarray], k: int,
                      labels: Sequence[int] = None) -> float:
    """
    Mean derivative of the loss w.r.t. ``||w_k||`` over a set of samples.

    For a sample x of class j the derivative is
    ``(p_k(x) - [k == j]) * ||f(x)|| * cos(theta_k)``.

    Args:
        model: Model evaluated as is
        subset: D_j as a Dataset, or an (n, p) input array with ``labels``
        k: Class whose weight norm is differentiated
        labels: Labels when ``subset`` is an array

    Returns:
        Mean radial derivative over the subset
    """
    if isinstance(subset, Dataset):
        X, y = subset.X, subset.y
    else:
        X, y = np.asarray(subset, dtype=np.float64), np.asarray(labels, dtype=np.int64)
    if len(y) == 0:
        raise InvalidArgumentError("radial derivative over an empty subset")
    if not 0 <= k < model.num_classes:
        raise InvalidArgumentError(f"class index {k} out of range [0, {model.num_classes})")
    w_k = model.classifier[:, k]
    norm_k = np.linalg.norm(w_k)
    if norm_k == 0:
        raise InvalidArgumentError(f"weight vector {k} is zero")
    record = model.forward(X)
    # ||f|| cos(theta_k) is the projection of f on the unit w_k
    projection = record.features @ (w_k / norm_k)
    coefficient = record.probabilities[:, k] - (y == k)
    return float(np.mean(coefficient * projection))


def radial_derivative_profile(model: Model, dataset: Dataset) -> np.ndarray:
    """``dL(D_j)/d||w_j||`` for every class j (NaN when D_j is empty)."""
    out = np.full(model.num_classes, np.nan)
    for j in range(model.num_classes):
        subset = class_subset(dataset, j)
        if len(subset):
            out[j] = radial_derivative(model, subset, j)
    return out


def pairwise_preference_flips(scores: np.ndarray, class_counts: Sequence[int], gamma: float) -> int:
    """
    Count pairwise preferences that re-scaling moves toward the more frequent class.

    For every sample and class pair (i, j) with n_i >= n_j, a violation is a
    pair that preferred j (s_j >= s_i) before re-scaling and prefers i after.

    Args:
        scores: (n, K) nonnegative logits
        class_counts: Training counts
        gamma: Re-scaling exponent

    Returns:
        Number of violations (zero for any valid input)
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim == 1:
        scores = scores[None, :]
    counts = np.asarray(class_counts)
    scaled = scores * RescaleSpec(gamma, counts).factors()[None, :]
    frequent = counts[:, None] >= counts[None, :]
    np.fill_diagonal(frequent, False)
    before = scores[:, None, :] >= scores[:, :, None]   # [s, i, j]: s_j >= s_i
    after = scaled[:, :, None] > scaled[:, None, :]     # [s, i, j]: s'_i > s'_j
    return int(np.sum(before & after & frequent[None, :, :]))
