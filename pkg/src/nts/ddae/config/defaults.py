"""
DDAE configuration defaults.

This module defines the default values and the admissible value lists used by the configuration
classes. Network and training defaults are desk scale: small enough to pre-train a model on a
CIFAR-10 subset in under an hour on one GPU. Full-scale settings are provided as presets
(see `presets.py`).

Constants:
    DEFAULT_SCHEDULE_KIND (str): Corruption parameterization, "VP".
    DEFAULT_SCHEDULE_KIND_LIST (tuple[str, str]): Supported parameterizations.
    DEFAULT_LEVELS (int): Number of noise levels T.
    DEFAULT_BETA_MIN, DEFAULT_BETA_MAX (float): Linear VP rate range.
    DEFAULT_SIGMA_MIN, DEFAULT_SIGMA_MAX (float): VE noise scale range.
    DEFAULT_POSTERIOR_VARIANCE (str): VP ancestral variance choice, "beta".
    DEFAULT_BASE_CHANNELS (int), DEFAULT_CHANNEL_MULTIPLIERS (tuple[int, ...]),
    DEFAULT_BLOCKS_PER_RESOLUTION (int), DEFAULT_ATTENTION_RESOLUTIONS (tuple[int, ...]),
    DEFAULT_IMAGE_SIZE (int), DEFAULT_IN_CHANNELS (int), DEFAULT_DROPOUT (float),
    DEFAULT_NORM_GROUPS (int): Desk-scale network.
    DEFAULT_EPOCHS, DEFAULT_BATCH_SIZE, DEFAULT_LEARNING_RATE, DEFAULT_LR_SCHEDULE,
    DEFAULT_CHECKPOINT_EVERY, DEFAULT_AUGMENTATIONS: Pre-training options.
    DEFAULT_PROBE_*: Linear probing and fine-tuning options.
    DEFAULT_METRIC_*: Representation metric options.
"""

from typing import Optional

# Corruption schedule
DEFAULT_SCHEDULE_KIND: str = "VP"
DEFAULT_SCHEDULE_KIND_LIST: tuple[str, str] = ("VP", "VE")
DEFAULT_LEVELS: int = 1000
DEFAULT_BETA_MIN: float = 1e-4
DEFAULT_BETA_MAX: float = 0.02
DEFAULT_SIGMA_MIN: float = 0.002
DEFAULT_SIGMA_MAX: float = 80.0
DEFAULT_POSTERIOR_VARIANCE: str = "beta"
DEFAULT_POSTERIOR_VARIANCE_LIST: tuple[str, str] = ("beta", "tilde")

# Network
DEFAULT_BASE_CHANNELS: int = 32
DEFAULT_CHANNEL_MULTIPLIERS: tuple[int, ...] = (1, 2, 2)
DEFAULT_BLOCKS_PER_RESOLUTION: int = 1
DEFAULT_ATTENTION_RESOLUTIONS: tuple[int, ...] = (8,)
DEFAULT_IMAGE_SIZE: int = 32
DEFAULT_IN_CHANNELS: int = 3
DEFAULT_DROPOUT: float = 0.0
DEFAULT_NORM_GROUPS: int = 32
# time_embed_dim defaults to 4 x base_channels
DEFAULT_TIME_EMBED_FACTOR: int = 4

# Pre-training
DEFAULT_EPOCHS: int = 30
DEFAULT_BATCH_SIZE: int = 128
DEFAULT_LEARNING_RATE: float = 2e-4
DEFAULT_LR_SCHEDULE: str = "constant"
DEFAULT_LR_SCHEDULE_LIST: tuple[str, str] = ("constant", "cosine")
DEFAULT_SEED: int = 0
DEFAULT_CHECKPOINT_EVERY: int = 5
DEFAULT_AUGMENTATIONS: tuple[str, ...] = ("horizontal_flip",)
DEFAULT_AUGMENTATION_LIST: tuple[str, str] = ("horizontal_flip", "pad_crop")
DEFAULT_PAD_CROP_PADDING: int = 4
DEFAULT_EMA_DECAY: Optional[float] = None
DEFAULT_GRAD_CLIP: Optional[float] = 1.0
DEFAULT_LOADER_PREFETCH: int = 2

# Linear probing / fine-tuning
DEFAULT_PROBE_EPOCHS: int = 10
DEFAULT_PROBE_BATCH_SIZE: int = 128
DEFAULT_PROBE_LEARNING_RATE: float = 1e-3
DEFAULT_PROBE_LR_SCHEDULE: str = "cosine"
DEFAULT_PROBE_WARMUP_EPOCHS: int = 0
DEFAULT_PROBE_WEIGHT_DECAY: float = 0.0
DEFAULT_PROBE_AUGMENTATIONS: tuple[str, ...] = ("horizontal_flip", "pad_crop")
DEFAULT_HOLDOUT_FRACTION: float = 0.1
DEFAULT_NOISING: str = "random"
DEFAULT_NOISING_LIST: tuple[str, str] = ("random", "none")
DEFAULT_RENOISE_EACH_EPOCH: bool = True
DEFAULT_REFINE_STRIDE: Optional[int] = None
DEFAULT_WORKERS: int = 1

# Representation metrics
DEFAULT_METRIC_PAIRS: int = 512
DEFAULT_SHARED_NOISE: bool = True
DEFAULT_FID_EMBEDDER: str = "pca"
DEFAULT_FID_EMBEDDER_LIST: tuple[str, str] = ("pca", "encoder")
DEFAULT_FID_SAMPLES: int = 1000
DEFAULT_PCA_COMPONENTS: int = 64
DEFAULT_CLASSIFIER_HIDDEN: int = 256
DEFAULT_CLASSIFIER_EPOCHS: int = 10
DEFAULT_GUIDANCE_SCALING: str = "variance"
DEFAULT_GUIDANCE_SCALING_LIST: tuple[str, str] = ("variance", "std")

# Dataset
DEFAULT_DATASET_FORMAT: str = "cifar10"
DEFAULT_DATASET_FORMAT_LIST: tuple[str, str] = ("cifar10", "png")
DEFAULT_NUM_CLASSES: int = 10
DEFAULT_DATA_DIR_ENV: str = "DDAE_DATA_DIR"
DEFAULT_OUT_DIR: str = "runs"
DEFAULT_PRESET: str = "desk"
