"""Diagnostics report: one CSV per analysis plus a JSON summary"""

import logging
from pathlib import Path
from typing import Dict, Optional, Sequence

import numpy as np
import pandas as pd

from ..data.dataset import Dataset
from ..models.boundary import norm_profile, radial_derivative_profile
from ..models.mlp import Model
from ..utils.io import write_frame, write_json
from ..utils.numerics import column_norms
from .diagnostics import (cluster_stats, confusion, evaluate, feature_volume_share, frequency_correlation,
                          gamma_sweep)

logger = logging.getLogger(__name__)

REPORT_FILES = ('clusters.csv', 'confusion.csv', 'norms.csv', 'sweep.csv', 'summary.json')


def _finite_or_none(value) -> Optional[float]:
    value = float(value)
    return value if np.isfinite(value) else None


def norms_frame(model: Model, train_set: Dataset, class_counts: Sequence[int]) -> pd.DataFrame:
    """Per-class weight norm, relative norm and radial loss derivative."""
    return pd.DataFrame({
        'class': np.arange(model.num_classes),
        'count': np.asarray(class_counts, dtype=np.int64),
        'norm': column_norms(model.classifier),
        'relative_norm': norm_profile(model.classifier),
        'radial_derivative': radial_derivative_profile(model, train_set),
    })


def write_report(out_dir, model: Model, train_set: Dataset, test_set: Dataset,
                 class_counts: Sequence[int], gammas: Sequence[float] = (0.0,),
                 estimator: str = 'rms', workers: int = 1,
                 extra: Optional[Dict] = None) -> Dict[str, Path]:
    """
    Run every diagnostic and write the report files into ``out_dir``.

    Low-dimensional features (d = 2 or 3) also get the share of feature
    space each class wins in the summary.

    Args:
        out_dir: Output directory (created if missing)
        model: Model to analyse
        train_set: Training split the model was fitted on
        test_set: Test split
        class_counts: Training counts behind re-scaling
        gammas: Grid for the sweep curve
        estimator: Cluster spread estimator
        workers: Threads for the sweep
        extra: Additional keys merged into summary.json

    Returns:
        Mapping of file name to written path
    """
    out_dir = Path(out_dir)
    counts = np.asarray(class_counts, dtype=np.int64)
    logger.info("Writing diagnostics report to %s", out_dir)

    clusters = cluster_stats(model, train_set, test_set, estimator)
    matrix = confusion(model, test_set)
    norms = norms_frame(model, train_set, counts)
    sweep = gamma_sweep(model, counts, test_set, gammas, workers)
    metrics = evaluate(model, test_set)

    paths = {
        'clusters.csv': write_frame(out_dir / 'clusters.csv', clusters.to_frame()),
        'confusion.csv': write_frame(out_dir / 'confusion.csv', matrix.to_frame()),
        'norms.csv': write_frame(out_dir / 'norms.csv', norms),
        'sweep.csv': write_frame(out_dir / 'sweep.csv', sweep.to_frame()),
    }

    summary = {
        'accuracy': matrix.accuracy,
        'top1_error': metrics['top1_error'],
        'top5_error': metrics['top5_error'],
        'balanced_error': metrics['balanced_error'],
        'norm_count_spearman': _finite_or_none(frequency_correlation(counts, norms['norm'])),
        'center_gap_count_spearman': _finite_or_none(frequency_correlation(counts, clusters.center_gap)),
        'negative_radial_share': float(np.mean(norms['radial_derivative'].dropna() < 0)),
        'best_gamma': sweep.best_gamma(),
        'best_balanced_error': float(np.nanmin(sweep.balanced_error)),
        'estimator': estimator,
        'excluded_zero_features': int(clusters.zero_train.sum() + clusters.zero_test.sum()),
    }
    if model.feature_dim in (2, 3):
        summary['feature_volume_share'] = feature_volume_share(model.classifier).tolist()
    if extra:
        summary.update(extra)
    paths['summary.json'] = write_json(out_dir / 'summary.json', summary)
    return paths
