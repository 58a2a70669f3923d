"""Diagnostic analyses of a trained classifier

Angular cluster statistics of the features (cluster size on train/test and
the train/test center gap), confusion matrices, gamma sweeps of the
re-scaling rule, the oracle fine-tune that bounds what a fixed feature
extractor can reach, and raw feature export.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.stats import spearmanr
from sklearn.metrics import confusion_matrix

from ..data.dataset import Dataset
from ..errors import InvalidArgumentError
from ..models.boundary import RescaleSpec, rescale
from ..models.losses import LossSpec
from ..models.mlp import Model
from ..models.optim import TrainConfig, train
from ..utils.io import write_frame
from ..utils.metrics import calculate_metrics, per_class_error
from ..utils.numerics import angles_to, unit_rows

logger = logging.getLogger(__name__)

SPREAD_ESTIMATORS = ('rms', 'std')


@dataclass
class ClusterStats:
    """Per-class angular cluster size on train/test and the train/test center gap (degrees)"""

    sigma_train: np.ndarray
    sigma_test: np.ndarray
    center_gap: np.ndarray
    n_train: np.ndarray
    n_test: np.ndarray
    zero_train: np.ndarray
    zero_test: np.ndarray
    estimator: str = 'rms'

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            'class': np.arange(len(self.sigma_train)),
            'n_train': self.n_train,
            'n_test': self.n_test,
            'sigma_train': self.sigma_train,
            'sigma_test': self.sigma_test,
            'center_gap': self.center_gap,
            'zero_train': self.zero_train,
            'zero_test': self.zero_test,
        })


def _spherical_center(units: np.ndarray) -> Optional[np.ndarray]:
    mean = units.mean(axis=0)
    norm = np.linalg.norm(mean)
    return None if norm == 0 else mean / norm


def _spread(angles: np.ndarray, estimator: str) -> float:
    if estimator == 'rms':
        return float(np.sqrt(np.mean(angles ** 2)))
    return float(np.std(angles))


def cluster_stats(model: Model, train_set: Dataset, test_set: Dataset,
                  estimator: str = 'rms') -> ClusterStats:
    """
    Angular statistics of every class's feature cluster.

    Features are projected to the unit sphere; the cluster center is the
    renormalized mean of the unit features. The cluster size is the angular
    deviation of the samples about that center: ``rms`` is the root mean
    square of the sample-to-center angles, ``std`` their population standard
    deviation. Zero feature vectors are excluded and counted.

    Args:
        model: Trained model (read only)
        train_set: Training split
        test_set: Test split with the same classes
        estimator: ``rms`` or ``std``

    Returns:
        ClusterStats with sigma_train, sigma_test and center_gap per class
    """
    if estimator not in SPREAD_ESTIMATORS:
        raise InvalidArgumentError(f"estimator must be one of {SPREAD_ESTIMATORS}, got {estimator!r}")
    num_classes = model.num_classes
    for split in (train_set, test_set):
        if split.num_classes != num_classes:
            raise InvalidArgumentError(f"{split.split} split has {split.num_classes} classes, model has {num_classes}")
        empty = np.flatnonzero(split.class_counts == 0)
        if empty.size:
            raise InvalidArgumentError(f"classes {empty.tolist()} have no {split.split} samples")

    sigma = {'train': np.full(num_classes, np.nan), 'test': np.full(num_classes, np.nan)}
    zeros = {'train': np.zeros(num_classes, dtype=np.int64), 'test': np.zeros(num_classes, dtype=np.int64)}
    centers = {'train': [None] * num_classes, 'test': [None] * num_classes}
    for split in (train_set, test_set):
        tag = 'train' if split is train_set else 'test'
        features = model.features(split.X)
        for j in range(num_classes):
            units, nonzero = unit_rows(features[split.y == j])
            zeros[tag][j] = int((~nonzero).sum())
            if not units.shape[0]:
                logger.warning("Class %d has only zero %s features; excluded from cluster statistics", j, tag)
                continue
            center = _spherical_center(units)
            if center is None:
                continue
            centers[tag][j] = center
            sigma[tag][j] = _spread(angles_to(units, center), estimator)
        if zeros[tag].any():
            logger.warning("Excluded %d zero %s feature vectors", int(zeros[tag].sum()), tag)

    gap = np.full(num_classes, np.nan)
    for j in range(num_classes):
        if centers['train'][j] is not None and centers['test'][j] is not None:
            gap[j] = float(angles_to(centers['train'][j][None, :], centers['test'][j])[0])

    return ClusterStats(sigma['train'], sigma['test'], gap, train_set.class_counts, test_set.class_counts,
                        zeros['train'], zeros['test'], estimator)


@dataclass
class ConfusionMatrix:
    """K x K counts; rows are true classes, columns predicted classes"""

    counts: np.ndarray

    @classmethod
    def from_predictions(cls, y_true, y_pred, num_classes: int) -> 'ConfusionMatrix':
        return cls(confusion_matrix(y_true, y_pred, labels=np.arange(num_classes)))

    @property
    def accuracy(self) -> float:
        total = self.counts.sum()
        return float(np.trace(self.counts) / total) if total else float('nan')

    def per_class_error(self) -> np.ndarray:
        totals = self.counts.sum(axis=1)
        with np.errstate(invalid='ignore', divide='ignore'):
            return np.where(totals > 0, 1.0 - np.diag(self.counts) / np.maximum(totals, 1), np.nan)

    def to_frame(self) -> pd.DataFrame:
        num_classes = self.counts.shape[0]
        frame = pd.DataFrame(self.counts, columns=[f"pred_{j}" for j in range(num_classes)])
        frame.insert(0, 'actual', np.arange(num_classes))
        return frame


def confusion(model: Model, test_set: Dataset, classifier: Optional[np.ndarray] = None) -> ConfusionMatrix:
    """Confusion matrix of arg-max predictions on ``test_set``."""
    scores = model.logits(test_set.X, classifier)
    return ConfusionMatrix.from_predictions(test_set.y, np.argmax(scores, axis=1), model.num_classes)


def evaluate(model: Model, dataset: Dataset, classifier: Optional[np.ndarray] = None) -> Dict[str, Any]:
    """Top-1, top-5, balanced and per-class error of ``model`` on ``dataset``."""
    if len(dataset) == 0:
        raise InvalidArgumentError("cannot evaluate on an empty dataset")
    return calculate_metrics(dataset.y, model.logits(dataset.X, classifier))


@dataclass
class SweepResult:
    """Errors of the re-scaled classifier over a gamma grid"""

    gammas: np.ndarray
    top1_error: np.ndarray
    balanced_error: np.ndarray
    per_class_error: np.ndarray

    def best_gamma(self, metric: str = 'balanced_error') -> float:
        return float(self.gammas[int(np.nanargmin(getattr(self, metric)))])

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({'gamma': self.gammas, 'top1_error': self.top1_error,
                              'balanced_error': self.balanced_error})
        for j in range(self.per_class_error.shape[1]):
            frame[f"error_{j}"] = self.per_class_error[:, j]
        return frame


def gamma_sweep(model: Model, class_counts: Sequence[int], test_set: Dataset,
                gammas: Sequence[float], workers: int = 1) -> SweepResult:
    """
    Evaluate the re-scaled classifier for every gamma of a grid.

    The model itself is never modified; features are computed once and each
    grid point multiplies them by a re-scaled copy of the classifier.

    Args:
        model: Trained model
        class_counts: Training counts n_j
        test_set: Evaluation split
        gammas: Grid of gamma values (nonempty)
        workers: Threads used to evaluate grid points

    Returns:
        SweepResult aligned with ``gammas``
    """
    gammas = np.asarray(list(gammas), dtype=np.float64)
    if gammas.size == 0:
        raise InvalidArgumentError("gamma grid is empty")
    if len(test_set) == 0:
        raise InvalidArgumentError("cannot sweep on an empty test set")
    features = model.features(test_set.X)
    num_classes = model.num_classes

    def point(gamma: float):
        W = rescale(model.classifier, RescaleSpec(float(gamma), class_counts))
        pred = np.argmax(features @ W, axis=1)
        errors = per_class_error(test_set.y, pred, num_classes)
        return float(np.mean(pred != test_set.y)), float(np.nanmean(errors)), errors

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(point, gammas))
    else:
        results = [point(g) for g in gammas]

    return SweepResult(gammas,
                       np.array([r[0] for r in results]),
                       np.array([r[1] for r in results]),
                       np.vstack([r[2] for r in results]))


@dataclass(frozen=True)
class OracleConfig:
    """Classifier fine-tune on test features; ``batch_size=None`` means full batch"""

    epochs: int = 100
    lr: float = 0.01
    momentum: float = 0.9
    weight_decay: float = 0.0
    batch_size: Optional[int] = None
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0:
            raise InvalidArgumentError(f"oracle epochs must be >= 0, got {self.epochs}")


@dataclass
class OracleResult:
    error: float
    start_error: float
    classifier: np.ndarray = field(repr=False)
    balanced_error: float = float('nan')

    def to_dict(self) -> Dict[str, float]:
        return {'oracle_error': self.error, 'oracle_balanced_error': self.balanced_error,
                'start_error': self.start_error}


def oracle_finetune(model: Model, test_set: Dataset, config: OracleConfig = OracleConfig()) -> OracleResult:
    """
    Fine-tune the classifier alone on test features, extractor frozen.

    Training starts from the model's current classifier with plain
    cross-entropy. Because the classifier is fitted and scored on the same
    samples, the resulting error is a lower bound for the feature extractor.

    Args:
        model: Trained model (never modified)
        test_set: Test split
        config: Fine-tune schedule

    Returns:
        OracleResult with the final and starting test error and the tuned classifier
    """
    if len(test_set) == 0:
        raise InvalidArgumentError("oracle fine-tune needs test samples")
    features = model.features(test_set.X)
    head = Model([], model.classifier.copy(), input_dim=model.feature_dim)
    start_error = float(np.mean(np.argmax(features @ head.classifier, axis=1) != test_set.y))

    if config.epochs > 0:
        feature_set = Dataset(features, test_set.y, model.num_classes, 'test', test_set.class_names)
        train_config = TrainConfig(lr=config.lr, momentum=config.momentum, weight_decay=config.weight_decay,
                                   epochs=config.epochs, batch_size=config.batch_size or len(feature_set),
                                   seed=config.seed)
        train(head, feature_set, LossSpec('plain_ce'), train_config)

    pred = np.argmax(features @ head.classifier, axis=1)
    error = float(np.mean(pred != test_set.y))
    balanced = float(np.nanmean(per_class_error(test_set.y, pred, model.num_classes)))
    logger.info("Oracle fine-tune: error %.4f (from %.4f)", error, start_error)
    return OracleResult(error, start_error, head.classifier, balanced)


def export_features(model: Model, dataset: Dataset, path) -> pd.DataFrame:
    """
    Write the features of every sample as CSV: f0..f{d-1}, label, split.

    Returns:
        The exported frame
    """
    columns = [f"f{i}" for i in range(model.feature_dim)]
    if len(dataset):
        features = model.features(dataset.X)
    else:
        features = np.zeros((0, model.feature_dim))
    frame = pd.DataFrame(features, columns=columns)
    frame['label'] = dataset.y
    frame['split'] = dataset.split
    write_frame(path, frame)
    return frame


def read_features(path) -> pd.DataFrame:
    """Read a file written by :func:`export_features`."""
    return pd.read_csv(path, float_precision='round_trip')


def frequency_correlation(class_counts: Sequence[int], values: Sequence[float]) -> float:
    """Spearman rank correlation between class counts and a per-class quantity (NaNs dropped)."""
    counts = np.asarray(class_counts, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    keep = ~np.isnan(values)
    if keep.sum() < 2:
        return float('nan')
    return float(spearmanr(counts[keep], values[keep]).statistic)


def feature_volume_share(W: np.ndarray, n_samples: int = 100_000, seed: int = 0) -> np.ndarray:
    """
    Monte-Carlo share of the nonnegative unit ball won by each class.

    Decision regions of a bias-free linear classifier are cones, so the
    share of volume equals the share of uniformly drawn nonnegative
    directions whose arg-max logit is the class.

    Args:
        W: (d, K) classifier with d in {2, 3}
        n_samples: Number of directions drawn
        seed: Sampling seed

    Returns:
        Array of K shares summing to 1
    """
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2 or W.shape[0] not in (2, 3):
        raise InvalidArgumentError("volume estimates are only available for 2-D or 3-D features")
    directions = np.abs(np.random.default_rng(seed).normal(size=(n_samples, W.shape[0])))
    winners = np.argmax(directions @ W, axis=1)
    return np.bincount(winners, minlength=W.shape[1]) / n_samples
