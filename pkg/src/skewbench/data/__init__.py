"""Datasets, imbalance protocols and file loaders"""

from .dataset import (Dataset, ImbalanceSpec, align_labels, class_subset, generate_synthetic, implant,
                      implant_long_tail, implant_step, oversample, undersample)
from .loaders import load_csv, load_idx, save_csv

__all__ = ['Dataset', 'ImbalanceSpec', 'align_labels', 'class_subset', 'generate_synthetic', 'implant',
           'implant_long_tail', 'implant_step', 'oversample', 'undersample', 'load_csv', 'load_idx', 'save_csv']
