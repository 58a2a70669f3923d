"""Model, losses, optimizer and decision-boundary geometry"""

from .boundary import RescaleSpec, boundary_angle_2d, boundary_residual, norm_profile, radial_derivative, rescale
from .losses import LossSpec, batch_loss, focal_term, sample_weight
from .mlp import Checkpoint, Model, load_checkpoint, save_checkpoint
from .optim import TrainConfig, TrainTrace, train, wvn_project

__all__ = ['RescaleSpec', 'boundary_angle_2d', 'boundary_residual', 'norm_profile', 'radial_derivative',
           'rescale', 'LossSpec', 'batch_loss', 'focal_term', 'sample_weight', 'Checkpoint', 'Model',
           'load_checkpoint', 'save_checkpoint', 'TrainConfig', 'TrainTrace', 'train', 'wvn_project']
