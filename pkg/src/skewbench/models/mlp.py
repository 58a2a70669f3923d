"""MLP feature extractor with a bias-free linear classifier

This module provides the :class:`Model` used throughout SkewBench: a small
multilayer perceptron f(.) with a ReLU after every layer (including the
last, so features are nonnegative) followed by logits ``l(x) = W^T f(x)``.
Forward and backward passes are written out analytically in numpy.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import InvalidArgumentError, ParseError
from ..utils.io import read_json, write_json
from ..utils.numerics import as_real_array, log_softmax_at, softmax

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = 'skewbench-checkpoint'
CHECKPOINT_VERSION = 1


@dataclass
class ForwardRecord:
    """Intermediate values of a forward pass over a batch"""

    inputs: np.ndarray
    pre_activations: List[np.ndarray]
    activations: List[np.ndarray]
    features: np.ndarray
    logits: np.ndarray
    probabilities: np.ndarray


@dataclass
class Gradients:
    """Gradients of the batch loss w.r.t. every parameter, shaped like the parameters"""

    layer_weights: List[np.ndarray]
    layer_biases: List[np.ndarray]
    classifier: np.ndarray
    loss: float = 0.0

    def arrays(self) -> List[np.ndarray]:
        """Gradients in the order of :meth:`Model.parameters`."""
        out = []
        for w, b in zip(self.layer_weights, self.layer_biases):
            out.extend([w, b])
        out.append(self.classifier)
        return out


@dataclass
class Model:
    """
    Feature extractor layers ``(weight (fan_in, fan_out), bias (fan_out,))``
    and classifier ``W`` of shape (d, K).
    """

    layers: List[Tuple[np.ndarray, np.ndarray]]
    classifier: np.ndarray
    input_dim: int = field(default=0)

    def __post_init__(self):
        self.layers = [(np.array(w, dtype=np.float64, order='C'), np.array(b, dtype=np.float64, order='C'))
                       for w, b in self.layers]
        self.classifier = np.array(self.classifier, dtype=np.float64, order='C')
        if self.classifier.ndim != 2:
            raise InvalidArgumentError("classifier must be a (d, K) matrix")
        if self.layers:
            self.input_dim = int(self.layers[0][0].shape[0])
        elif not self.input_dim:
            self.input_dim = int(self.classifier.shape[0])
        width = self.input_dim
        for i, (w, b) in enumerate(self.layers):
            if w.ndim != 2 or w.shape[0] != width or b.shape != (w.shape[1],):
                raise InvalidArgumentError(f"layer {i} has shape {w.shape}/{b.shape}, expected fan_in {width}")
            width = w.shape[1]
        if width != self.classifier.shape[0]:
            raise InvalidArgumentError(f"feature width {width} does not match classifier rows {self.classifier.shape[0]}")

    @classmethod
    def init(cls, input_dim: int, hidden: Sequence[int], feature_dim: int,
             num_classes: int, seed: int) -> 'Model':
        """
        Initialize a model with zero-mean Gaussian weights of scale 1/sqrt(fan_in).

        Args:
            input_dim: Input dimension p
            hidden: Widths of the hidden layers (may be empty)
            feature_dim: Feature dimension d
            num_classes: Number of classes K
            seed: Seed; identical seeds give identical parameters

        Returns:
            Freshly initialized model (biases start at zero)
        """
        widths = [input_dim, *hidden, feature_dim, num_classes]
        if any(int(w) < 1 for w in widths):
            raise InvalidArgumentError(f"every width must be >= 1, got {widths}")
        rng = np.random.default_rng(seed)
        layers = []
        for fan_in, fan_out in zip(widths[:-2], widths[1:-1]):
            layers.append((rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=(fan_in, fan_out)), np.zeros(fan_out)))
        classifier = rng.normal(0.0, 1.0 / np.sqrt(feature_dim), size=(feature_dim, num_classes))
        return cls(layers, classifier, input_dim)

    @property
    def feature_dim(self) -> int:
        return int(self.classifier.shape[0])

    @property
    def num_classes(self) -> int:
        return int(self.classifier.shape[1])

    @property
    def hidden(self) -> List[int]:
        return [int(w.shape[1]) for w, _ in self.layers[:-1]]

    def parameters(self) -> List[np.ndarray]:
        """All parameter arrays (extractor weight, bias, ..., classifier); views, not copies."""
        out = []
        for w, b in self.layers:
            out.extend([w, b])
        out.append(self.classifier)
        return out

    def extractor_parameters(self) -> List[np.ndarray]:
        return self.parameters()[:-1]

    def num_parameters(self) -> int:
        return int(sum(p.size for p in self.parameters()))

    def copy(self) -> 'Model':
        return Model([(w.copy(), b.copy()) for w, b in self.layers], self.classifier.copy(), self.input_dim)

    def _check_input(self, X) -> np.ndarray:
        X = as_real_array(X, 'input')
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.input_dim:
            raise InvalidArgumentError(f"input has length {X.shape[1]}, model expects {self.input_dim}")
        return X

    def forward(self, X) -> ForwardRecord:
        """
        Forward pass.

        Args:
            X: One input vector of length p or an (n, p) batch

        Returns:
            ForwardRecord with per-layer values, features, logits and probabilities
        """
        X = self._check_input(X)
        pre, acts = [], []
        h = X
        for w, b in self.layers:
            z = h @ w + b
            h = np.maximum(z, 0.0)
            pre.append(z)
            acts.append(h)
        if not self.layers:
            h = np.maximum(X, 0.0)
        logits = h @ self.classifier
        return ForwardRecord(X, pre, acts, h, logits, softmax(logits))

    def features(self, X) -> np.ndarray:
        return self.forward(X).features

    def logits(self, X, classifier: Optional[np.ndarray] = None) -> np.ndarray:
        W = self.classifier if classifier is None else classifier
        return self.features(X) @ W

    def predict(self, X) -> np.ndarray:
        """Arg-max class of every input."""
        return np.argmax(self.forward(X).logits, axis=1)

    def backward(self, X, y, sample_weights: Optional[np.ndarray] = None,
                 focal_gamma: float = 0.0) -> Gradients:
        """
        Gradient of the (weighted) mean loss over a batch.

        The loss is ``sum_i w_i * l_i / sum_i w_i`` with ``l_i`` the
        cross-entropy, or the focal term ``(1 - p_y)^gamma * (-ln p_y)``
        when ``focal_gamma > 0``. Unit weights give the plain mean.

        Args:
            X: (n, p) batch, n >= 1
            y: (n,) labels
            sample_weights: Optional positive per-sample weights
            focal_gamma: Focal exponent (0 = cross-entropy)

        Returns:
            Gradients for every parameter, plus the batch loss
        """
        X = self._check_input(X)
        y = np.asarray(y, dtype=np.int64).reshape(-1)
        n = X.shape[0]
        if n == 0:
            raise InvalidArgumentError("backward needs a nonempty batch")
        if y.shape[0] != n:
            raise InvalidArgumentError(f"{n} inputs but {y.shape[0]} labels")
        if np.any(y < 0) or np.any(y >= self.num_classes):
            raise InvalidArgumentError(f"labels must lie in [0, {self.num_classes})")
        weights = np.ones(n) if sample_weights is None else np.asarray(sample_weights, dtype=np.float64)
        if weights.shape != (n,) or np.any(weights <= 0):
            raise InvalidArgumentError("sample_weights must be n positive numbers")
        if focal_gamma < 0:
            raise InvalidArgumentError("focal_gamma must be >= 0")

        record = self.forward(X)
        rows = np.arange(n)
        log_p = log_softmax_at(record.logits, y)
        p_true = record.probabilities[rows, y]
        one_hot = np.zeros_like(record.probabilities)
        one_hot[rows, y] = 1.0

        if focal_gamma == 0.0:
            per_sample = -log_p
            # dl/dz = p - onehot
            scale = np.ones(n)
        else:
            q = 1.0 - p_true
            modulator = np.power(q, focal_gamma)
            per_sample = modulator * (-log_p)
            # dl/dz = -(p_y * dl/dp_y) * (onehot - p)
            with np.errstate(divide='ignore', invalid='ignore'):
                slope = np.where(q > 0, focal_gamma * np.power(q, focal_gamma - 1.0) * p_true * log_p, 0.0)
            scale = modulator - slope

        norm = weights / weights.sum()
        delta = (scale * norm)[:, None] * (record.probabilities - one_hot)

        grad_classifier = record.features.T @ delta
        grad_h = delta @ self.classifier.T
        grad_w: List[np.ndarray] = [None] * len(self.layers)
        grad_b: List[np.ndarray] = [None] * len(self.layers)
        for i in range(len(self.layers) - 1, -1, -1):
            grad_z = grad_h * (record.pre_activations[i] > 0)
            below = record.activations[i - 1] if i > 0 else record.inputs
            grad_w[i] = below.T @ grad_z
            grad_b[i] = grad_z.sum(axis=0)
            if i > 0:
                grad_h = grad_z @ self.layers[i][0].T

        return Gradients(grad_w, grad_b, grad_classifier, float(np.sum(norm * per_sample)))

    def to_dict(self) -> Dict[str, Any]:
        """JSON-ready parameter dump (floats keep their exact binary value)."""
        return {
            'dims': {'input': self.input_dim, 'hidden': self.hidden,
                     'feature': self.feature_dim, 'classes': self.num_classes},
            'layers': [{'weight': w.tolist(), 'bias': b.tolist()} for w, b in self.layers],
            'classifier_columns': self.classifier.T.tolist(),
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> 'Model':
        try:
            dims = payload['dims']
            layers = [(np.array(layer['weight'], dtype=np.float64).reshape(len(layer['weight']), -1),
                       np.array(layer['bias'], dtype=np.float64)) for layer in payload['layers']]
            classifier = np.array(payload['classifier_columns'], dtype=np.float64).T
            model = cls(layers, classifier, int(dims['input']))
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(f"corrupt model parameters: {e}") from e
        if (model.feature_dim, model.num_classes) != (int(dims['feature']), int(dims['classes'])):
            raise ParseError("model dims disagree with stored parameters")
        return model


def gradient_check(model: Model, X, y, step: float = 1e-5,
                   sample_weights: Optional[np.ndarray] = None,
                   focal_gamma: float = 0.0) -> Tuple[List[np.ndarray], List[np.ndarray]]:
    """
    Central finite-difference check of :meth:`Model.backward`.

    Args:
        model: Model to probe (restored unchanged afterwards)
        X: Batch of inputs
        y: Labels
        step: Finite-difference step
        sample_weights: Optional per-sample weights
        focal_gamma: Focal exponent

    Returns:
        (analytic gradients, numeric gradients), both in parameter order
    """
    analytic = model.backward(X, y, sample_weights, focal_gamma).arrays()
    numeric = []
    for param in model.parameters():
        grad = np.zeros_like(param)
        flat = param.reshape(-1)
        grad_flat = grad.reshape(-1)
        for idx in range(flat.size):
            original = flat[idx]
            flat[idx] = original + step
            plus = model.backward(X, y, sample_weights, focal_gamma).loss
            flat[idx] = original - step
            minus = model.backward(X, y, sample_weights, focal_gamma).loss
            flat[idx] = original
            grad_flat[idx] = (plus - minus) / (2 * step)
        numeric.append(grad)
    return analytic, numeric


@dataclass
class Checkpoint:
    """A trained model with the training context needed to re-scale and evaluate it"""

    model: Model
    class_counts: np.ndarray
    seed: int
    config: Dict[str, Any] = field(default_factory=dict)
    classifier_base: Optional[np.ndarray] = None
    gamma: float = 0.0
    method: str = 'baseline'

    def __post_init__(self):
        self.class_counts = np.asarray(self.class_counts, dtype=np.int64)
        if self.classifier_base is None:
            self.classifier_base = self.model.classifier.copy()
        if self.class_counts.shape != (self.model.num_classes,):
            raise InvalidArgumentError("class_counts must hold one count per class")

    def to_dict(self) -> Dict[str, Any]:
        payload = {'format': CHECKPOINT_FORMAT, 'version': CHECKPOINT_VERSION}
        payload.update(self.model.to_dict())
        payload.update({
            'classifier_base_columns': self.classifier_base.T.tolist(),
            'class_counts': self.class_counts.tolist(),
            'gamma': float(self.gamma),
            'method': self.method,
            'seed': int(self.seed),
            'config': self.config,
        })
        return payload

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> 'Checkpoint':
        if not isinstance(payload, dict) or payload.get('format') != CHECKPOINT_FORMAT:
            raise ParseError("not a SkewBench checkpoint")
        if payload.get('version') != CHECKPOINT_VERSION:
            raise ParseError(f"unsupported checkpoint version {payload.get('version')!r}")
        model = Model.from_dict(payload)
        try:
            base = np.array(payload['classifier_base_columns'], dtype=np.float64).T
            return cls(model, payload['class_counts'], int(payload['seed']), payload.get('config', {}),
                       base, float(payload.get('gamma', 0.0)), payload.get('method', 'baseline'))
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(f"corrupt checkpoint: {e}") from e


def save_checkpoint(path, checkpoint: Checkpoint):
    """Write a checkpoint as JSON (atomically)."""
    path = write_json(path, checkpoint.to_dict())
    logger.info("Checkpoint saved to %s", path)
    return path


def load_checkpoint(path) -> Checkpoint:
    """Read a checkpoint written by :func:`save_checkpoint`."""
    try:
        payload = read_json(path)
    except ValueError as e:
        raise ParseError(f"{path}: invalid JSON ({e})") from e
    return Checkpoint.from_dict(payload)
