"""Convolutional surrogate for multiscale band decomposition.

Consumes datasets produced by the decomposition engine through its
on-disk exchange formats (manifest.json plus band tensor files) and
trains a fixed-architecture CNN to predict the band planes directly.
"""

from .losses import SELECTORS, compute_loss
from .manifest import DatasetIndex, load_dataset
from .model import ARCH_SPEC, TVSpecNet
from .training import TrainConfig, load_checkpoint, train

__all__ = [
    "ARCH_SPEC",
    "SELECTORS",
    "DatasetIndex",
    "TVSpecNet",
    "TrainConfig",
    "compute_loss",
    "load_checkpoint",
    "load_dataset",
    "train",
]

__version__ = "0.1.0"
