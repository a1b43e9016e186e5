"""
Diffusion pre-training.

Classes:
    - BatchProducer: Threaded producer of augmented batches.
    - EMA: Exponential moving average of weights.

Functions:
    - pretrain_step, pretrain: Noise-regression training.
    - augment, horizontal_flip, pad_crop: Seeded augmentations.
    - make_optimizer, make_lr_scheduler, lr_factor: Optimizer factories shared with the probes.
"""

from .augment import augment, horizontal_flip, pad_crop
from .optim import lr_factor, make_lr_scheduler, make_optimizer
from .producer import BatchProducer, epoch_batches
from .pretrain import EMA, checkpoint_paths, pretrain, pretrain_step, sample_levels

__all__ = [
    "augment",
    "horizontal_flip",
    "pad_crop",
    "lr_factor",
    "make_lr_scheduler",
    "make_optimizer",
    "BatchProducer",
    "epoch_batches",
    "EMA",
    "checkpoint_paths",
    "pretrain",
    "pretrain_step",
    "sample_levels",
]
