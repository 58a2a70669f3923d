"""Diagnostic analyses and reports"""

from .diagnostics import (ClusterStats, ConfusionMatrix, OracleConfig, SweepResult, cluster_stats, confusion,
                          export_features, gamma_sweep, oracle_finetune)
from .reports import write_report

__all__ = ['ClusterStats', 'ConfusionMatrix', 'OracleConfig', 'SweepResult', 'cluster_stats', 'confusion',
           'export_features', 'gamma_sweep', 'oracle_finetune', 'write_report']
