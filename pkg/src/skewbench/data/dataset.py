"""Labeled datasets and class-imbalance protocols

This module holds the immutable :class:`Dataset` value, the long-tailed and
step imbalance implantation protocols, the over/under-sampling baselines
and the seeded Gaussian-mixture generator used as a desk-scale stand-in for
image benchmarks.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from sklearn.datasets import make_blobs

from ..errors import InfeasibleImbalanceError, InvalidArgumentError

logger = logging.getLogger(__name__)

SPLITS = ('train', 'test')
IMBALANCE_KINDS = ('long_tailed', 'step', 'none')


@dataclass(frozen=True)
class Dataset:
    """Samples ``X`` (n, p) with labels ``y`` in [0, K)"""

    X: np.ndarray
    y: np.ndarray
    num_classes: int
    split: str = 'train'
    class_names: Tuple[str, ...] = field(default=())

    def __post_init__(self):
        X = np.array(self.X, dtype=np.float64)
        y = np.array(self.y, dtype=np.int64)
        if X.ndim == 1 and X.size == 0:
            X = X.reshape(0, 0)
        if X.ndim != 2:
            raise InvalidArgumentError(f"X must be a 2-D array, got {X.ndim} dimensions")
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise InvalidArgumentError(f"y must hold one label per row of X ({X.shape[0]}), got shape {y.shape}")
        if self.num_classes < 1:
            raise InvalidArgumentError("num_classes must be at least 1")
        if y.size and (y.min() < 0 or y.max() >= self.num_classes):
            raise InvalidArgumentError(f"labels must lie in [0, {self.num_classes})")
        if not np.all(np.isfinite(X)):
            raise InvalidArgumentError("X contains non-finite values")
        if self.split not in SPLITS:
            raise InvalidArgumentError(f"split must be one of {SPLITS}, got {self.split!r}")
        names = tuple(self.class_names) or tuple(str(j) for j in range(self.num_classes))
        if len(names) != self.num_classes:
            raise InvalidArgumentError("class_names must name every class")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, 'X', X)
        object.__setattr__(self, 'y', y)
        object.__setattr__(self, 'class_names', names)

    def __len__(self) -> int:
        return int(self.y.shape[0])

    @property
    def input_dim(self) -> int:
        return int(self.X.shape[1])

    @property
    def class_counts(self) -> np.ndarray:
        """Label histogram n_0..n_{K-1}."""
        return np.bincount(self.y, minlength=self.num_classes)

    @property
    def imbalance_ratio(self) -> float:
        """Most over least frequent training count (inf when a class is empty)."""
        counts = self.class_counts
        return float('inf') if counts.min() == 0 else float(counts.max() / counts.min())

    def canonical_order(self) -> np.ndarray:
        """Class indices sorted by non-increasing count (stable)."""
        return np.argsort(-self.class_counts, kind='stable')

    def take(self, indices: Sequence[int]) -> 'Dataset':
        """Dataset restricted to the given sample indices (same classes)."""
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.X[idx], self.y[idx], self.num_classes, self.split, self.class_names)


@dataclass(frozen=True)
class ImbalanceSpec:
    """Which imbalance protocol to implant, with ratio rho = n_max / n_min"""

    kind: str = 'none'
    ratio: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in IMBALANCE_KINDS:
            raise InvalidArgumentError(f"imbalance kind must be one of {IMBALANCE_KINDS}, got {self.kind!r}")
        if not np.isfinite(self.ratio) or self.ratio < 1:
            raise InvalidArgumentError(f"imbalance ratio must be >= 1, got {self.ratio}")


def round_half_up(values) -> np.ndarray:
    return np.floor(np.asarray(values, dtype=np.float64) + 0.5).astype(np.int64)


def long_tail_counts(n: int, num_classes: int, ratio: float) -> np.ndarray:
    """
    Exponentially decaying per-class counts.

    Args:
        n: Count kept for the most frequent class
        num_classes: Number of classes K
        ratio: Imbalance ratio rho

    Returns:
        Counts ``round(n * rho ** (-j / (K - 1)))`` for j = 0..K-1
    """
    if num_classes == 1:
        return np.array([n], dtype=np.int64)
    exponents = -np.arange(num_classes) / (num_classes - 1)
    return round_half_up(n * np.power(float(ratio), exponents))


def step_counts(n: int, num_classes: int, ratio: float) -> np.ndarray:
    """Two-level counts: the first ceil(K/2) classes keep n, the rest round(n / rho)."""
    n_major = -(-num_classes // 2)
    counts = np.full(num_classes, int(round_half_up(n / ratio)), dtype=np.int64)
    counts[:n_major] = n
    return counts


def _check_ratio(ratio: float):
    if not np.isfinite(ratio) or ratio < 1:
        raise InvalidArgumentError(f"imbalance ratio must be >= 1, got {ratio}")


def _base_count(d: Dataset) -> int:
    if d.split != 'train':
        raise InvalidArgumentError("imbalance is implanted into the training split only")
    counts = d.class_counts
    if counts.min() == 0:
        raise InvalidArgumentError("every class needs samples before implantation")
    if counts.min() != counts.max():
        logger.warning("Implantation input is not balanced (counts %d..%d); using n=%d",
                       counts.min(), counts.max(), counts.min())
    return int(counts.min())


def _subsample(d: Dataset, keep: np.ndarray, seed: int) -> Dataset:
    if keep.min() < 1:
        raise InfeasibleImbalanceError(
            f"imbalance leaves class {int(np.argmin(keep))} with {int(keep.min())} samples")
    rng = np.random.default_rng(seed)
    selected = []
    for j in range(d.num_classes):
        members = np.flatnonzero(d.y == j)
        selected.append(rng.choice(members, size=int(keep[j]), replace=False))
    return d.take(np.sort(np.concatenate(selected)))


def relabel(d: Dataset, order: Sequence[int]) -> Dataset:
    """
    Permute class indices.

    Args:
        d: Input dataset
        order: ``order[new] = old`` class index

    Returns:
        Dataset whose class ``new`` is the input's class ``order[new]``
    """
    order = np.asarray(order, dtype=np.int64)
    if sorted(order.tolist()) != list(range(d.num_classes)):
        raise InvalidArgumentError("order must be a permutation of the class indices")
    inverse = np.empty_like(order)
    inverse[order] = np.arange(d.num_classes)
    names = tuple(d.class_names[o] for o in order)
    return Dataset(d.X, inverse[d.y], d.num_classes, d.split, names)


def align_labels(d: Dataset, reference: Dataset) -> Dataset:
    """Relabel ``d`` so its class indices match ``reference`` by class name."""
    if set(d.class_names) != set(reference.class_names):
        raise InvalidArgumentError("datasets do not share the same classes")
    position = {name: j for j, name in enumerate(d.class_names)}
    return relabel(d, [position[name] for name in reference.class_names])


def implant_long_tail(d: Dataset, ratio: float, seed: int) -> Dataset:
    """
    Implant a long-tailed (exponential) imbalance.

    Args:
        d: Balanced training set with n samples per class
        ratio: Imbalance ratio rho >= 1
        seed: Seed of the without-replacement selection

    Returns:
        Dataset whose class j keeps round(n * rho^(-j/(K-1))) samples
    """
    _check_ratio(ratio)
    n = _base_count(d)
    keep = long_tail_counts(n, d.num_classes, ratio)
    logger.info("Long-tail implantation rho=%g: counts %s", ratio, keep.tolist())
    return _subsample(d, keep, seed)


def implant_step(d: Dataset, ratio: float, seed: int) -> Dataset:
    """
    Implant a step imbalance.

    Classes are shuffled under ``seed`` and relabelled; the first ceil(K/2)
    keep n samples and the remaining ones keep round(n / rho). Use
    :func:`align_labels` to bring the test split to the new labelling.
    """
    _check_ratio(ratio)
    n = _base_count(d)
    if ratio == 1:
        return d
    rng = np.random.default_rng(seed)
    shuffled = relabel(d, rng.permutation(d.num_classes))
    keep = step_counts(n, d.num_classes, ratio)
    logger.info("Step implantation rho=%g: %d majority classes of %d, minority %d",
                ratio, int((keep == n).sum()), n, int(keep[-1]))
    return _subsample(shuffled, keep, int(rng.integers(2 ** 31)))


def implant(d: Dataset, spec: ImbalanceSpec) -> Dataset:
    """Apply the protocol named by ``spec.kind``."""
    if spec.kind == 'long_tailed':
        return implant_long_tail(d, spec.ratio, spec.seed)
    if spec.kind == 'step':
        return implant_step(d, spec.ratio, spec.seed)
    return d


def _require_nonempty_classes(d: Dataset):
    counts = d.class_counts
    if counts.min() == 0:
        raise InvalidArgumentError(f"class {int(np.argmin(counts))} has no samples")


def oversample(d: Dataset, seed: int) -> Dataset:
    """
    Raise every class to the largest class count by duplicating its samples.

    Original samples are all kept; the extra ones are drawn with replacement
    from the same class.
    """
    _require_nonempty_classes(d)
    counts = d.class_counts
    target = int(counts.max())
    rng = np.random.default_rng(seed)
    extra = []
    for j in range(d.num_classes):
        missing = target - int(counts[j])
        if missing > 0:
            extra.append(rng.choice(np.flatnonzero(d.y == j), size=missing, replace=True))
    if not extra:
        return d
    return d.take(np.concatenate([np.arange(len(d))] + extra))


def undersample(d: Dataset, seed: int) -> Dataset:
    """Reduce every class to the smallest class count, without replacement."""
    _require_nonempty_classes(d)
    counts = d.class_counts
    return _subsample(d, np.full(d.num_classes, int(counts.min())), seed)


def class_subset(d: Dataset, label: int) -> Dataset:
    """D_j: the samples of one class."""
    if not 0 <= label < d.num_classes:
        raise InvalidArgumentError(f"class index {label} out of range [0, {d.num_classes})")
    return d.take(np.flatnonzero(d.y == label))


def generate_synthetic(num_classes: int, per_class_count: int, input_dim: int,
                       class_separation: float, noise_scale: float, seed: int,
                       test_per_class_count: Optional[int] = None) -> Tuple[Dataset, Dataset]:
    """
    Generate a balanced isotropic Gaussian mixture.

    Class j is centered on a random unit direction scaled by
    ``class_separation``; samples add ``noise_scale`` times standard normal
    noise. Train and test are drawn from the same distribution.

    Args:
        num_classes: Number of classes K (>= 2)
        per_class_count: Training samples per class
        input_dim: Input dimension p (>= 2)
        class_separation: Norm of every class mean
        noise_scale: Per-coordinate noise standard deviation
        seed: Seed; identical seeds give bitwise identical datasets
        test_per_class_count: Test samples per class (defaults to per_class_count)

    Returns:
        (train Dataset, test Dataset)
    """
    if num_classes < 2:
        raise InvalidArgumentError("num_classes must be at least 2")
    if input_dim < 2:
        raise InvalidArgumentError("input_dim must be at least 2")
    if per_class_count < 1:
        raise InvalidArgumentError("per_class_count must be at least 1")
    if noise_scale < 0 or class_separation < 0:
        raise InvalidArgumentError("noise_scale and class_separation must be nonnegative")
    test_count = per_class_count if test_per_class_count is None else test_per_class_count
    if test_count < 1:
        raise InvalidArgumentError("test_per_class_count must be at least 1")

    means_seed, train_seed, test_seed = (
        int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(3))
    directions = np.random.default_rng(means_seed).normal(size=(num_classes, input_dim))
    centers = class_separation * directions / np.linalg.norm(directions, axis=1, keepdims=True)

    splits = []
    for split, count, split_seed in (('train', per_class_count, train_seed), ('test', test_count, test_seed)):
        X, y = make_blobs(n_samples=[count] * num_classes, n_features=input_dim, centers=centers,
                          cluster_std=noise_scale, shuffle=False, random_state=split_seed)
        splits.append(Dataset(X, y, num_classes, split))
    return splits[0], splits[1]
