"""SGD with momentum, step learning-rate schedule and weight vector normalization

``train`` runs the mini-batch loop: sample a batch, take an SGD step on the
extractor and classifier alike, and, with WVN enabled, project every
classifier column back to unit norm (projective SGD).
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from ..data.dataset import Dataset
from ..errors import InvalidArgumentError, NumericDegeneracyError
from ..utils.io import write_frame
from ..utils.numerics import column_norms
from .losses import LossSpec, batch_loss, class_weights
from .mlp import Gradients, Model

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer hyperparameters and schedule"""

    lr: float = 0.1
    momentum: float = 0.9
    weight_decay: float = 5e-4
    epochs: int = 30
    batch_size: int = 128
    decay_epochs: Tuple[int, ...] = ()
    decay_factor: float = 0.1
    wvn: bool = False
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, 'decay_epochs', tuple(int(e) for e in self.decay_epochs))
        if not np.isfinite(self.lr) or self.lr < 0:
            raise InvalidArgumentError(f"lr must be >= 0, got {self.lr}")
        if not 0 <= self.momentum < 1:
            raise InvalidArgumentError(f"momentum must lie in [0, 1), got {self.momentum}")
        if self.weight_decay < 0:
            raise InvalidArgumentError(f"weight_decay must be >= 0, got {self.weight_decay}")
        if int(self.epochs) < 1:
            raise InvalidArgumentError(f"epochs must be >= 1, got {self.epochs}")
        if int(self.batch_size) < 1:
            raise InvalidArgumentError(f"batch_size must be >= 1, got {self.batch_size}")
        if not 0 < self.decay_factor <= 1:
            raise InvalidArgumentError(f"decay_factor must lie in (0, 1], got {self.decay_factor}")


@dataclass
class OptimizerState:
    """Momentum buffers mirroring the model parameters, plus loop counters"""

    buffers: List[np.ndarray]
    epoch: int = 0
    iteration: int = 0
    lr: float = 0.0

    @classmethod
    def for_model(cls, model: Model, config: TrainConfig) -> 'OptimizerState':
        return cls([np.zeros_like(p) for p in model.parameters()], lr=lr_at(0, config))


def lr_at(epoch: int, config: TrainConfig) -> float:
    """Step schedule: ``lr * decay_factor ** (number of milestones <= epoch)``."""
    passed = sum(1 for milestone in config.decay_epochs if epoch >= milestone)
    return config.lr * config.decay_factor ** passed


def sgd_step(model: Model, grads: Gradients, state: OptimizerState,
             config: TrainConfig) -> Tuple[Model, OptimizerState]:
    """
    One SGD-with-momentum update, in place.

    ``v <- momentum * v + grad + weight_decay * param``, then
    ``param <- param - lr * v`` for every extractor and classifier parameter.

    Returns:
        The updated (model, state)
    """
    params = model.parameters()
    grad_arrays = grads.arrays()
    if len(params) != len(grad_arrays) or len(params) != len(state.buffers):
        raise InvalidArgumentError("gradients or momentum buffers do not match the model parameters")
    for param, grad, buf in zip(params, grad_arrays, state.buffers):
        if param.shape != grad.shape or param.shape != buf.shape:
            raise InvalidArgumentError(f"shape mismatch: param {param.shape}, grad {grad.shape}, buffer {buf.shape}")
        buf *= config.momentum
        buf += grad
        if config.weight_decay:
            buf += config.weight_decay * param
        param -= state.lr * buf
    state.iteration += 1
    return model, state


def wvn_project(W: np.ndarray) -> np.ndarray:
    """
    Weight vector normalization: scale every column of ``W`` to unit norm.

    Raises:
        NumericDegeneracyError: if a column is zero
    """
    W = np.asarray(W, dtype=np.float64)
    norms = column_norms(W)
    if np.any(norms == 0) or not np.all(np.isfinite(norms)):
        bad = np.flatnonzero((norms == 0) | ~np.isfinite(norms)).tolist()
        raise NumericDegeneracyError(f"cannot normalize degenerate classifier columns {bad}")
    return W / norms


@dataclass
class TrainTrace:
    """Per-epoch measurements: lr, training loss/accuracy and classifier column norms"""

    rows: List[Dict[str, float]] = field(default_factory=list)

    def record(self, epoch: int, lr: float, loss: float, accuracy: float, norms: np.ndarray):
        row = {'epoch': int(epoch), 'lr': float(lr), 'train_loss': float(loss), 'train_acc': float(accuracy)}
        row.update({f"norm_{j}": float(v) for j, v in enumerate(norms)})
        self.rows.append(row)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows)

    def norms(self) -> np.ndarray:
        """(epochs, K) matrix of recorded column norms."""
        frame = self.to_frame()
        return frame[[c for c in frame.columns if c.startswith('norm_')]].to_numpy()

    def to_csv(self, path):
        return write_frame(path, self.to_frame())

    @classmethod
    def read_csv(cls, path) -> 'TrainTrace':
        frame = pd.read_csv(path, float_precision='round_trip')
        rows = frame.to_dict(orient='records')
        for row in rows:
            row['epoch'] = int(row['epoch'])
        return cls(rows)


def _measure(model: Model, dataset: Dataset, loss_spec: LossSpec,
             counts: np.ndarray) -> Tuple[float, float]:
    record = model.forward(dataset.X)
    loss, _ = batch_loss(loss_spec, record, dataset.y, counts)
    accuracy = float(np.mean(np.argmax(record.logits, axis=1) == dataset.y))
    return loss, accuracy


def train(model: Model, dataset: Dataset, loss_spec: LossSpec, config: TrainConfig,
          class_counts: Optional[Sequence[int]] = None,
          progress: bool = False) -> Tuple[Model, TrainTrace]:
    """
    Train ``model`` in place with mini-batch SGD.

    Each epoch shuffles the data under ``config.seed`` and walks it in
    batches of ``config.batch_size`` (the last, smaller batch included).
    With ``config.wvn`` the classifier columns are normalized after every
    step. At the end of each epoch the trace records the learning rate used,
    the full training-set loss and accuracy, and every column norm.

    Args:
        model: Model to train (mutated)
        dataset: Training set
        loss_spec: Loss used for the gradients
        config: Optimizer configuration
        class_counts: Counts behind the loss weights (defaults to the
                      dataset's own histogram, floored at 1)
        progress: Show a tqdm progress bar

    Returns:
        (trained model, TrainTrace)
    """
    if len(dataset) == 0:
        raise InvalidArgumentError("cannot train on an empty dataset")
    if dataset.input_dim != model.input_dim or dataset.num_classes != model.num_classes:
        raise InvalidArgumentError(
            f"dataset (p={dataset.input_dim}, K={dataset.num_classes}) does not match "
            f"model (p={model.input_dim}, K={model.num_classes})")
    counts = np.maximum(dataset.class_counts if class_counts is None else np.asarray(class_counts), 1)
    per_class = class_weights(loss_spec, counts)

    rng = np.random.default_rng(config.seed)
    state = OptimizerState.for_model(model, config)
    trace = TrainTrace()
    n = len(dataset)

    for epoch in tqdm(range(config.epochs), desc='epochs', disable=not progress):
        state.epoch = epoch
        state.lr = lr_at(epoch, config)
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch = order[start:start + config.batch_size]
            yb = dataset.y[batch]
            grads = model.backward(dataset.X[batch], yb, per_class[yb], loss_spec.gamma)
            sgd_step(model, grads, state, config)
            if config.wvn:
                model.classifier[...] = wvn_project(model.classifier)
        loss, accuracy = _measure(model, dataset, loss_spec, counts)
        trace.record(epoch, state.lr, loss, accuracy, column_norms(model.classifier))
        logger.debug("epoch %d lr=%g loss=%.6f acc=%.4f", epoch, state.lr, loss, accuracy)

    logger.info("Trained %d epochs (%d iterations), final loss %.6f", config.epochs, state.iteration, loss)
    return model, trace
