"""Numeric primitives shared by every SkewBench module

Softmax, cross-entropy and angle computations in 64-bit floating point.
All functions are pure and accept either a single vector or a batch of
row vectors.
"""

import numpy as np

from ..errors import InvalidArgumentError


def as_real_array(values, name: str = 'input', ndim: tuple = (1, 2)) -> np.ndarray:
    """
    Convert to a finite float64 array and validate its rank.

    Args:
        values: Array-like input
        name: Argument name used in error messages
        ndim: Accepted numbers of dimensions

    Returns:
        float64 ndarray
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim not in ndim:
        raise InvalidArgumentError(f"{name} must have {' or '.join(map(str, ndim))} dimensions, got {arr.ndim}")
    if arr.size == 0 or arr.shape[-1] == 0:
        raise InvalidArgumentError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} contains non-finite elements")
    return arr


def softmax(z) -> np.ndarray:
    """
    Numerically stable softmax.

    Args:
        z: Logits, a vector of length K or an (n, K) batch

    Returns:
        Probabilities with the same shape as ``z``; each row sums to 1
    """
    z = as_real_array(z, 'logits')
    shifted = z - np.max(z, axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=-1, keepdims=True)


def cross_entropy(p, y) -> np.ndarray:
    """
    Negative log-likelihood of the true class.

    Args:
        p: Probability vector (K,) or batch (n, K)
        y: Class index, or (n,) array of indices, in [0, K)

    Returns:
        ``-ln p_y`` (a float for a single vector, an array for a batch)
    """
    p = np.asarray(p, dtype=np.float64)
    if p.ndim not in (1, 2) or p.shape[-1] == 0:
        raise InvalidArgumentError("probabilities must be a non-empty vector or batch")
    n_classes = p.shape[-1]
    y_arr = np.asarray(y)
    if not np.issubdtype(y_arr.dtype, np.integer):
        raise InvalidArgumentError("class index must be an integer")
    if np.any(y_arr < 0) or np.any(y_arr >= n_classes):
        raise InvalidArgumentError(f"class index out of range [0, {n_classes})")

    if p.ndim == 1:
        if y_arr.ndim != 0:
            raise InvalidArgumentError("a single probability vector takes a scalar class index")
        return float(-np.log(p[int(y_arr)]))
    if y_arr.shape != (p.shape[0],):
        raise InvalidArgumentError("one class index per probability row is required")
    return -np.log(p[np.arange(p.shape[0]), y_arr])


def log_softmax_at(z: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``ln p_y`` computed from logits without forming p (exact for saturated rows)."""
    shifted = z - np.max(z, axis=-1, keepdims=True)
    log_norm = np.log(np.sum(np.exp(shifted), axis=-1))
    return shifted[np.arange(z.shape[0]), y] - log_norm


def angle_deg(u, v) -> float:
    """
    Angle between two nonzero vectors, in degrees.

    Args:
        u: First vector
        v: Second vector of the same length

    Returns:
        Angle in [0, 180]
    """
    u = as_real_array(u, 'u', ndim=(1,))
    v = as_real_array(v, 'v', ndim=(1,))
    if u.shape != v.shape:
        raise InvalidArgumentError(f"length mismatch: {u.shape[0]} vs {v.shape[0]}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise InvalidArgumentError("angle is undefined for a zero vector")
    return float(angles_to((u / nu)[None, :], v / nv)[0])


def angles_to(rows: np.ndarray, direction: np.ndarray) -> np.ndarray:
    """
    Angles in degrees between each row of ``rows`` (unit) and a unit ``direction``.

    Uses the half-angle form ``2 atan2(|a - b|, |a + b|)``, which keeps full
    precision near 0 and 180 degrees; rounding-level differences give exactly 0.
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    direction = np.asarray(direction, dtype=np.float64)
    diff = np.linalg.norm(rows - direction, axis=1)
    total = np.linalg.norm(rows + direction, axis=1)
    angles = np.degrees(2.0 * np.arctan2(diff, total))
    tol = 8.0 * np.finfo(np.float64).eps * np.sqrt(direction.size)
    angles[diff <= tol] = 0.0
    return angles


def column_norms(W: np.ndarray) -> np.ndarray:
    """Euclidean norm of every column of ``W``."""
    return np.linalg.norm(np.asarray(W, dtype=np.float64), axis=0)


def unit_rows(X: np.ndarray) -> tuple:
    """
    Normalize rows to unit length.

    Returns:
        (unit rows of the nonzero input rows, boolean mask of nonzero rows)
    """
    X = np.asarray(X, dtype=np.float64)
    norms = np.linalg.norm(X, axis=1)
    nonzero = norms > 0
    return X[nonzero] / norms[nonzero, None], nonzero


def relative_error(a, b, floor: float = 1e-6) -> np.ndarray:
    """Elementwise ``|a - b| / max(|a| + |b|, floor)``."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return np.abs(a - b) / np.maximum(np.abs(a) + np.abs(b), floor)
