"""Utility functions for classification metrics

This module provides functions for calculating the error metrics used to
compare class-imbalanced training methods: top-1/top-5 error, per-class
error and the balanced (class-averaged) error.
"""

import numpy as np
import pandas as pd
from sklearn.metrics import top_k_accuracy_score
from typing import Dict, Any

from ..errors import InvalidArgumentError


def per_class_error(y_true: np.ndarray, y_pred: np.ndarray, num_classes: int) -> np.ndarray:
    """
    Calculate the error rate of every class.

    Args:
        y_true: True labels in [0, num_classes)
        y_pred: Predicted labels
        num_classes: Number of classes K

    Returns:
        Array of K error rates; NaN for classes absent from ``y_true``
    """
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape:
        raise InvalidArgumentError("y_true and y_pred must have the same shape")
    totals = np.bincount(y_true, minlength=num_classes).astype(np.float64)
    wrong = np.bincount(y_true[y_true != y_pred], minlength=num_classes).astype(np.float64)
    with np.errstate(invalid='ignore', divide='ignore'):
        return np.where(totals > 0, wrong / np.maximum(totals, 1), np.nan)


def top_k_error(y_true: np.ndarray, scores: np.ndarray, k: int) -> float:
    """
    Fraction of samples whose true class is not among the k highest scores.

    Args:
        y_true: True labels
        scores: (n, K) class scores
        k: Number of guesses; clipped to K

    Returns:
        Top-k error in [0, 1]
    """
    scores = np.asarray(scores, dtype=np.float64)
    num_classes = scores.shape[1]
    if len(y_true) == 0:
        return float('nan')
    if k >= num_classes:
        return 0.0
    if num_classes == 2:
        # top_k_accuracy_score wants 1-D scores for the binary case
        return float(1.0 - np.mean(np.argmax(scores, axis=1) == y_true))
    accuracy = top_k_accuracy_score(y_true, scores, k=k, labels=np.arange(num_classes))
    return float(1.0 - accuracy)


def calculate_metrics(y_true: np.ndarray, scores: np.ndarray) -> Dict[str, Any]:
    """
    Calculate comprehensive classification metrics.

    Args:
        y_true: True labels
        scores: (n, K) logits or probabilities

    Returns:
        Dictionary with top-1, top-5, balanced and per-class errors
    """
    scores = np.asarray(scores, dtype=np.float64)
    y_true = np.asarray(y_true)
    num_classes = scores.shape[1]
    y_pred = np.argmax(scores, axis=1)
    class_errors = per_class_error(y_true, y_pred, num_classes)
    present = ~np.isnan(class_errors)

    metrics = {
        'top1_error': float(np.mean(y_pred != y_true)) if len(y_true) else float('nan'),
        'top5_error': top_k_error(y_true, scores, 5),
        'balanced_error': float(np.mean(class_errors[present])) if present.any() else float('nan'),
        'per_class_error': [None if np.isnan(e) else float(e) for e in class_errors],
    }

    return metrics


def evaluate_predictions(y_true: np.ndarray, scores: np.ndarray) -> pd.DataFrame:
    """
    Create a detailed per-sample evaluation DataFrame.

    Args:
        y_true: True labels
        scores: (n, K) class scores

    Returns:
        DataFrame with actual/predicted class, correctness and the margin
        between the true-class score and the best competing score
    """
    scores = np.asarray(scores, dtype=np.float64)
    y_true = np.asarray(y_true)
    rows = np.arange(len(y_true))
    competing = scores.copy()
    competing[rows, y_true] = -np.inf

    eval_df = pd.DataFrame({
        'actual': y_true,
        'predicted': np.argmax(scores, axis=1),
        'true_score': scores[rows, y_true],
        'margin': scores[rows, y_true] - competing.max(axis=1),
    })
    eval_df['correct'] = (eval_df['actual'] == eval_df['predicted']).astype(int)

    return eval_df
