"""Utility functions and helpers"""

from .metrics import calculate_metrics, evaluate_predictions

__all__ = ['calculate_metrics', 'evaluate_predictions']
