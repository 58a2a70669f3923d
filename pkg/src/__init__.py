"""SkewBench - weight vector normalization and re-scaling for class-imbalanced classification"""

__version__ = "0.1.0"
