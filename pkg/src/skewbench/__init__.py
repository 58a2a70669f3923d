"""SkewBench package for class-imbalanced classification experiments"""

from .data import Dataset, ImbalanceSpec, generate_synthetic
from .errors import SkewBenchError
from .models import Checkpoint, LossSpec, Model, RescaleSpec, TrainConfig, rescale, train

__version__ = "0.1.0"

__all__ = ['Dataset', 'ImbalanceSpec', 'generate_synthetic', 'SkewBenchError', 'Checkpoint',
           'LossSpec', 'Model', 'RescaleSpec', 'TrainConfig', 'rescale', 'train']
