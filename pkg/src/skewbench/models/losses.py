"""Per-sample loss weighting for the class-imbalance baselines

Plain cross-entropy, inverse-frequency re-weighting, focal loss and the
class-balanced (effective number) weighting, all expressed as weights and
terms on top of the softmax cross-entropy.
"""

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from ..errors import InvalidArgumentError
from ..utils.numerics import cross_entropy, log_softmax_at
from .mlp import ForwardRecord

LOSS_KINDS = ('plain_ce', 'reweighted_ce', 'focal', 'class_balanced_ce')
DEFAULT_FOCAL_GAMMA = 2.0
DEFAULT_BETA = 0.999


@dataclass(frozen=True)
class LossSpec:
    """Loss kind and its parameters (focal exponent, effective-number beta)"""

    kind: str = 'plain_ce'
    focal_gamma: float = DEFAULT_FOCAL_GAMMA
    beta: float = DEFAULT_BETA

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise InvalidArgumentError(f"loss kind must be one of {LOSS_KINDS}, got {self.kind!r}")
        if self.kind == 'focal' and not self.focal_gamma >= 0:
            raise InvalidArgumentError(f"focal_gamma must be >= 0, got {self.focal_gamma}")
        if self.kind == 'class_balanced_ce' and not 0 <= self.beta < 1:
            raise InvalidArgumentError(f"beta must lie in [0, 1), got {self.beta}")

    @property
    def gamma(self) -> float:
        """Focal exponent applied by the backward pass (0 unless focal)."""
        return float(self.focal_gamma) if self.kind == 'focal' else 0.0


def class_weights(spec: LossSpec, class_counts: Sequence[int], normalize: bool = True) -> np.ndarray:
    """
    Per-class loss weights.

    Args:
        spec: Loss specification
        class_counts: Training counts n_j, all >= 1
        normalize: Scale so that the weights average 1 over the training
                   distribution, i.e. ``sum_j n_j w_j = N``

    Returns:
        Array of K positive weights
    """
    counts = np.asarray(class_counts, dtype=np.float64)
    if counts.ndim != 1 or counts.size == 0 or np.any(counts < 1):
        raise InvalidArgumentError("class counts must all be >= 1")
    if spec.kind == 'reweighted_ce':
        weights = 1.0 / counts
    elif spec.kind == 'class_balanced_ce':
        if not 0 <= spec.beta < 1:
            raise InvalidArgumentError(f"beta must lie in [0, 1), got {spec.beta}")
        weights = (1.0 - spec.beta) / (1.0 - np.power(spec.beta, counts))
    else:
        return np.ones_like(counts)
    if normalize:
        weights = weights * counts.sum() / np.dot(counts, weights)
    return weights


def sample_weight(spec: LossSpec, y: int, class_counts: Sequence[int]) -> float:
    """Normalized loss weight of one sample of class ``y``."""
    weights = class_weights(spec, class_counts)
    if not 0 <= y < weights.size:
        raise InvalidArgumentError(f"class index {y} out of range [0, {weights.size})")
    return float(weights[y])


def focal_term(p, y, gamma: float):
    """
    Focal loss term ``(1 - p_y)^gamma * (-ln p_y)``.

    Args:
        p: Probability vector or batch
        y: Class index or array of indices
        gamma: Focal exponent >= 0

    Returns:
        The focal term (a float for a vector, an array for a batch)
    """
    ce = cross_entropy(p, y)
    p = np.asarray(p, dtype=np.float64)
    p_true = p[int(y)] if p.ndim == 1 else p[np.arange(p.shape[0]), np.asarray(y)]
    term = np.power(1.0 - p_true, gamma) * ce
    return float(term) if p.ndim == 1 else term


def per_sample_terms(spec: LossSpec, record: ForwardRecord, labels: np.ndarray) -> np.ndarray:
    """Per-sample loss terms from the logits, finite even when p_y underflows."""
    ce = -log_softmax_at(record.logits, labels)
    if spec.kind == 'focal':
        p_true = record.probabilities[np.arange(labels.size), labels]
        return np.power(1.0 - p_true, spec.focal_gamma) * ce
    return ce


def batch_loss(spec: LossSpec, record: ForwardRecord, labels,
               class_counts: Sequence[int]) -> Tuple[float, np.ndarray]:
    """
    Weighted mean loss of a batch.

    Args:
        spec: Loss specification
        record: Forward record of the batch
        labels: (n,) labels
        class_counts: Training counts used for the class weights

    Returns:
        (``sum w_i l_i / sum w_i``, per-sample weights to pass to ``Model.backward``)
    """
    labels = np.asarray(labels, dtype=np.int64)
    probabilities = record.probabilities
    if labels.shape != (probabilities.shape[0],):
        raise InvalidArgumentError(f"{probabilities.shape[0]} records but {labels.size} labels")
    if np.any(labels < 0) or np.any(labels >= probabilities.shape[1]):
        raise InvalidArgumentError(f"labels must lie in [0, {probabilities.shape[1]})")
    weights = class_weights(spec, class_counts)[labels]
    terms = per_sample_terms(spec, record, labels)
    return float(np.dot(weights, terms) / weights.sum()), weights


def class_wise_losses(record: ForwardRecord, labels, num_classes: int) -> np.ndarray:
    """
    Mean cross-entropy L(D_j) of every class present in the batch.

    Returns:
        Array of K losses (NaN for classes with no sample)
    """
    labels = np.asarray(labels, dtype=np.int64)
    terms = -log_softmax_at(record.logits, labels)
    totals = np.bincount(labels, weights=terms, minlength=num_classes)
    counts = np.bincount(labels, minlength=num_classes)
    with np.errstate(invalid='ignore', divide='ignore'):
        return np.where(counts > 0, totals / np.maximum(counts, 1), np.nan)
