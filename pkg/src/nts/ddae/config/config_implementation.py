"""
Implementation of the DDAE configuration models.

Every class below keeps its fields behind properties; each setter routes the new value through a
function of `validation.py`, so an instance can never hold an invalid value. Cross-field rules
(e.g. attention resolutions of a network) are re-checked after every assignment.

Example Usage:
>>> from nts.ddae.config import DDAEConfig
>>> config = DDAEConfig(base_channels=8, channel_multipliers=[1, 2], image_size=8)
>>> config.resolutions
(8, 4)

Classes:
    - ScheduleConfig: Noise schedule parameters, `build()` returns a `NoiseSchedule`.
    - DDAEConfig: UNet backbone shape.
    - TrainOpts: Diffusion pre-training options.
    - ProbeOpts: Linear probing, grid search and fine-tuning options.
    - MetricOpts: Representation metric, FID and noise-conditional classifier options.
    - RunConfig: Everything a CLI run needs, hashed through its canonical JSON form.
"""

from typing import Any, Iterable, Optional, Sequence, Union

from .config_interface import ConfigModel
from .defaults import (
    DEFAULT_SCHEDULE_KIND,
    DEFAULT_SCHEDULE_KIND_LIST,
    DEFAULT_LEVELS,
    DEFAULT_BETA_MIN,
    DEFAULT_BETA_MAX,
    DEFAULT_SIGMA_MIN,
    DEFAULT_SIGMA_MAX,
    DEFAULT_POSTERIOR_VARIANCE,
    DEFAULT_POSTERIOR_VARIANCE_LIST,
    DEFAULT_BASE_CHANNELS,
    DEFAULT_CHANNEL_MULTIPLIERS,
    DEFAULT_BLOCKS_PER_RESOLUTION,
    DEFAULT_ATTENTION_RESOLUTIONS,
    DEFAULT_IMAGE_SIZE,
    DEFAULT_IN_CHANNELS,
    DEFAULT_DROPOUT,
    DEFAULT_NORM_GROUPS,
    DEFAULT_TIME_EMBED_FACTOR,
    DEFAULT_EPOCHS,
    DEFAULT_BATCH_SIZE,
    DEFAULT_LEARNING_RATE,
    DEFAULT_LR_SCHEDULE,
    DEFAULT_LR_SCHEDULE_LIST,
    DEFAULT_SEED,
    DEFAULT_CHECKPOINT_EVERY,
    DEFAULT_AUGMENTATIONS,
    DEFAULT_AUGMENTATION_LIST,
    DEFAULT_EMA_DECAY,
    DEFAULT_GRAD_CLIP,
    DEFAULT_LOADER_PREFETCH,
    DEFAULT_PROBE_EPOCHS,
    DEFAULT_PROBE_BATCH_SIZE,
    DEFAULT_PROBE_LEARNING_RATE,
    DEFAULT_PROBE_LR_SCHEDULE,
    DEFAULT_PROBE_WARMUP_EPOCHS,
    DEFAULT_PROBE_WEIGHT_DECAY,
    DEFAULT_PROBE_AUGMENTATIONS,
    DEFAULT_HOLDOUT_FRACTION,
    DEFAULT_NOISING,
    DEFAULT_NOISING_LIST,
    DEFAULT_RENOISE_EACH_EPOCH,
    DEFAULT_REFINE_STRIDE,
    DEFAULT_WORKERS,
    DEFAULT_METRIC_PAIRS,
    DEFAULT_SHARED_NOISE,
    DEFAULT_FID_EMBEDDER,
    DEFAULT_FID_EMBEDDER_LIST,
    DEFAULT_FID_SAMPLES,
    DEFAULT_PCA_COMPONENTS,
    DEFAULT_CLASSIFIER_HIDDEN,
    DEFAULT_CLASSIFIER_EPOCHS,
    DEFAULT_GUIDANCE_SCALING,
    DEFAULT_GUIDANCE_SCALING_LIST,
    DEFAULT_DATASET_FORMAT,
    DEFAULT_DATASET_FORMAT_LIST,
    DEFAULT_OUT_DIR,
    DEFAULT_PRESET,
)
from .validation import (
    validate_positive_int,
    validate_non_negative_int,
    validate_optional_positive_int,
    validate_positive_float,
    validate_non_negative_float,
    validate_fraction,
    validate_optional_fraction,
    validate_choice,
    validate_choice_set,
    validate_int_tuple,
    validate_bool,
    validate_seed,
    validate_beta_range,
    validate_sigma_range,
)
from ..exceptions import DDAEConfigError


class ScheduleConfig(ConfigModel):
    """
    Noise schedule parameters.

    Only the bounds matching `kind` are used by `build()`; both pairs are kept so that a
    configuration can switch kind without losing the other pair.

    Properties:
        kind (str): "VP" or "VE".
        levels (int): Number of noise levels T.
        beta_min, beta_max (float): VP rate bounds.
        sigma_min, sigma_max (float): VE scale bounds.
        posterior_variance (str): "beta" or "tilde" (VP ancestral variance).
    """

    # pylint: disable=too-many-arguments, too-many-positional-arguments
    def __init__(
        self,
        kind: Optional[str] = None,
        levels: Optional[int] = None,
        beta_min: Optional[float] = None,
        beta_max: Optional[float] = None,
        sigma_min: Optional[float] = None,
        sigma_max: Optional[float] = None,
        posterior_variance: Optional[str] = None,
    ) -> None:
        self._kind = validate_choice(
            "kind", kind, DEFAULT_SCHEDULE_KIND, DEFAULT_SCHEDULE_KIND_LIST
        )
        self._levels = validate_positive_int("levels", levels, DEFAULT_LEVELS)
        self._beta_min, self._beta_max = validate_beta_range(
            DEFAULT_BETA_MIN if beta_min is None else beta_min,
            DEFAULT_BETA_MAX if beta_max is None else beta_max,
        )
        self._sigma_min, self._sigma_max = validate_sigma_range(
            DEFAULT_SIGMA_MIN if sigma_min is None else sigma_min,
            DEFAULT_SIGMA_MAX if sigma_max is None else sigma_max,
        )
        self._posterior_variance = validate_choice(
            "posterior_variance",
            posterior_variance,
            DEFAULT_POSTERIOR_VARIANCE,
            DEFAULT_POSTERIOR_VARIANCE_LIST,
        )

    @property
    def kind(self) -> str:
        """Corruption parameterization, "VP" or "VE"."""
        return self._kind

    @kind.setter
    def kind(self, value: str) -> None:
        self._kind = validate_choice(
            "kind", value, DEFAULT_SCHEDULE_KIND, DEFAULT_SCHEDULE_KIND_LIST
        )

    @property
    def levels(self) -> int:
        """Number of noise levels T."""
        return self._levels

    @levels.setter
    def levels(self, value: int) -> None:
        self._levels = validate_positive_int("levels", value, DEFAULT_LEVELS)

    @property
    def beta_min(self) -> float:
        """Smallest VP rate."""
        return self._beta_min

    @beta_min.setter
    def beta_min(self, value: float) -> None:
        self._beta_min, self._beta_max = validate_beta_range(value, self._beta_max)

    @property
    def beta_max(self) -> float:
        """Largest VP rate."""
        return self._beta_max

    @beta_max.setter
    def beta_max(self, value: float) -> None:
        self._beta_min, self._beta_max = validate_beta_range(self._beta_min, value)

    @property
    def sigma_min(self) -> float:
        """Smallest VE noise scale."""
        return self._sigma_min

    @sigma_min.setter
    def sigma_min(self, value: float) -> None:
        self._sigma_min, self._sigma_max = validate_sigma_range(value, self._sigma_max)

    @property
    def sigma_max(self) -> float:
        """Largest VE noise scale."""
        return self._sigma_max

    @sigma_max.setter
    def sigma_max(self, value: float) -> None:
        self._sigma_min, self._sigma_max = validate_sigma_range(self._sigma_min, value)

    @property
    def posterior_variance(self) -> str:
        """VP ancestral variance: "beta" or "tilde"."""
        return self._posterior_variance

    @posterior_variance.setter
    def posterior_variance(self, value: str) -> None:
        self._posterior_variance = validate_choice(
            "posterior_variance",
            value,
            DEFAULT_POSTERIOR_VARIANCE,
            DEFAULT_POSTERIOR_VARIANCE_LIST,
        )

    def build(self):
        """
        Construct the schedule.

        Returns:
            NoiseSchedule: VP or VE schedule with these parameters.
        """
        # pylint: disable=import-outside-toplevel
        from ..corruption.schedule import make_vp_schedule, make_ve_schedule

        if self.kind == "VP":
            return make_vp_schedule(
                self.levels, self.beta_min, self.beta_max, self.posterior_variance
            )
        return make_ve_schedule(self.levels, self.sigma_min, self.sigma_max)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "levels": self.levels,
            "beta_min": self.beta_min,
            "beta_max": self.beta_max,
            "sigma_min": self.sigma_min,
            "sigma_max": self.sigma_max,
            "posterior_variance": self.posterior_variance,
        }


class DDAEConfig(ConfigModel):
    """
    Shape of the UNet backbone.

    Example:
    >>> config = DDAEConfig(base_channels=128, channel_multipliers=[1, 2, 2, 2],
    ...                     blocks_per_resolution=2, attention_resolutions=[16])
    >>> config.stage_channels
    (128, 256, 256, 256)

    Properties:
        base_channels (int): Channels of the first stage.
        channel_multipliers (tuple[int, ...]): One multiplier per resolution stage.
        blocks_per_resolution (int): Residual blocks per down stage (up stages get one more).
        attention_resolutions (tuple[int, ...]): Spatial sizes carrying a self-attention layer.
        image_size (int): Input side length, divisible by 2 ** (stages - 1).
        in_channels (int): Image channels.
        time_embed_dim (int): Width of the timestep embedding MLP, 4 x base_channels by default.
        dropout (float): Dropout rate inside residual blocks, in [0, 1).
        groups (int): Maximal number of GroupNorm groups.
    """

    # pylint: disable=too-many-arguments, too-many-positional-arguments
    # pylint: disable=too-many-instance-attributes
    def __init__(
        self,
        base_channels: Optional[int] = None,
        channel_multipliers: Optional[Iterable[int]] = None,
        blocks_per_resolution: Optional[int] = None,
        attention_resolutions: Optional[Iterable[int]] = None,
        image_size: Optional[int] = None,
        in_channels: Optional[int] = None,
        time_embed_dim: Optional[int] = None,
        dropout: Optional[float] = None,
        groups: Optional[int] = None,
    ) -> None:
        self._base_channels = validate_positive_int(
            "base_channels", base_channels, DEFAULT_BASE_CHANNELS
        )
        self._channel_multipliers = validate_int_tuple(
            "channel_multipliers", channel_multipliers, DEFAULT_CHANNEL_MULTIPLIERS
        )
        self._blocks_per_resolution = validate_positive_int(
            "blocks_per_resolution", blocks_per_resolution, DEFAULT_BLOCKS_PER_RESOLUTION
        )
        self._attention_resolutions = self._validate_attention(attention_resolutions)
        self._image_size = validate_positive_int("image_size", image_size, DEFAULT_IMAGE_SIZE)
        self._in_channels = validate_positive_int("in_channels", in_channels, DEFAULT_IN_CHANNELS)
        self._time_embed_dim = validate_optional_positive_int("time_embed_dim", time_embed_dim)
        self._dropout = self._validate_dropout(dropout)
        self._groups = validate_positive_int("groups", groups, DEFAULT_NORM_GROUPS)
        self._check_consistency()

    @staticmethod
    def _validate_attention(value: Optional[Iterable[int]]) -> tuple[int, ...]:
        items = validate_int_tuple(
            "attention_resolutions", value, DEFAULT_ATTENTION_RESOLUTIONS, allow_empty=True
        )
        return tuple(sorted(set(items), reverse=True))

    @staticmethod
    def _validate_dropout(value: Optional[float]) -> float:
        dropout = validate_non_negative_float("dropout", value, DEFAULT_DROPOUT)
        if dropout >= 1.0:
            raise DDAEConfigError(f"dropout must lie in [0, 1), got {dropout}")
        return dropout

    def _check_consistency(self) -> None:
        factor = 2 ** (len(self._channel_multipliers) - 1)
        if self._image_size % factor:
            raise DDAEConfigError(
                f"image_size {self._image_size} is not divisible by 2^(stages-1) = {factor}"
            )
        unknown = sorted(set(self._attention_resolutions) - set(self.resolutions))
        if unknown:
            raise DDAEConfigError(
                f"attention_resolutions {unknown} are not feature-map sizes of this network "
                f"(sizes {list(self.resolutions)})"
            )

    @property
    def base_channels(self) -> int:
        """Channels of the first resolution stage."""
        return self._base_channels

    @base_channels.setter
    def base_channels(self, value: int) -> None:
        self._base_channels = validate_positive_int(
            "base_channels", value, DEFAULT_BASE_CHANNELS
        )

    @property
    def channel_multipliers(self) -> tuple[int, ...]:
        """Channel multiplier of each stage."""
        return self._channel_multipliers

    @channel_multipliers.setter
    def channel_multipliers(self, value: Iterable[int]) -> None:
        previous = self._channel_multipliers
        self._channel_multipliers = validate_int_tuple(
            "channel_multipliers", value, DEFAULT_CHANNEL_MULTIPLIERS
        )
        try:
            self._check_consistency()
        except DDAEConfigError:
            self._channel_multipliers = previous
            raise

    @property
    def blocks_per_resolution(self) -> int:
        """Residual blocks per down stage."""
        return self._blocks_per_resolution

    @blocks_per_resolution.setter
    def blocks_per_resolution(self, value: int) -> None:
        self._blocks_per_resolution = validate_positive_int(
            "blocks_per_resolution", value, DEFAULT_BLOCKS_PER_RESOLUTION
        )

    @property
    def attention_resolutions(self) -> tuple[int, ...]:
        """Spatial sizes with self-attention, largest first."""
        return self._attention_resolutions

    @attention_resolutions.setter
    def attention_resolutions(self, value: Iterable[int]) -> None:
        previous = self._attention_resolutions
        self._attention_resolutions = self._validate_attention(value)
        try:
            self._check_consistency()
        except DDAEConfigError:
            self._attention_resolutions = previous
            raise

    @property
    def image_size(self) -> int:
        """Input side length."""
        return self._image_size

    @image_size.setter
    def image_size(self, value: int) -> None:
        previous = self._image_size
        self._image_size = validate_positive_int("image_size", value, DEFAULT_IMAGE_SIZE)
        try:
            self._check_consistency()
        except DDAEConfigError:
            self._image_size = previous
            raise

    @property
    def in_channels(self) -> int:
        """Image channels."""
        return self._in_channels

    @in_channels.setter
    def in_channels(self, value: int) -> None:
        self._in_channels = validate_positive_int("in_channels", value, DEFAULT_IN_CHANNELS)

    @property
    def time_embed_dim(self) -> int:
        """Timestep embedding width."""
        if self._time_embed_dim is None:
            return DEFAULT_TIME_EMBED_FACTOR * self._base_channels
        return self._time_embed_dim

    @time_embed_dim.setter
    def time_embed_dim(self, value: Optional[int]) -> None:
        self._time_embed_dim = validate_optional_positive_int("time_embed_dim", value)

    @property
    def dropout(self) -> float:
        """Dropout rate inside residual blocks."""
        return self._dropout

    @dropout.setter
    def dropout(self, value: float) -> None:
        self._dropout = self._validate_dropout(value)

    @property
    def groups(self) -> int:
        """Maximal GroupNorm group count (reduced to a divisor of the channel count)."""
        return self._groups

    @groups.setter
    def groups(self, value: int) -> None:
        self._groups = validate_positive_int("groups", value, DEFAULT_NORM_GROUPS)

    @property
    def stages(self) -> int:
        """Number of resolution stages."""
        return len(self._channel_multipliers)

    @property
    def resolutions(self) -> tuple[int, ...]:
        """Feature-map side length of every stage."""
        return tuple(self._image_size // 2**i for i in range(self.stages))

    @property
    def stage_channels(self) -> tuple[int, ...]:
        """Channel count of every stage."""
        return tuple(self._base_channels * m for m in self._channel_multipliers)

    def to_dict(self) -> dict:
        return {
            "base_channels": self.base_channels,
            "channel_multipliers": list(self.channel_multipliers),
            "blocks_per_resolution": self.blocks_per_resolution,
            "attention_resolutions": list(self.attention_resolutions),
            "image_size": self.image_size,
            "in_channels": self.in_channels,
            "time_embed_dim": self.time_embed_dim,
            "dropout": self.dropout,
            "groups": self.groups,
        }


def _validate_optional_positive_float(name: str, value: Optional[float]) -> Optional[float]:
    if value is None:
        return None
    return validate_positive_float(name, value, None)


class TrainOpts(ConfigModel):
    """
    Diffusion pre-training options.

    Properties:
        epochs (int): Passes over the dataset, 0 leaves the network untouched.
        batch_size (int): Images per step.
        learning_rate (float): Adam learning rate, > 0.
        lr_schedule (str): "constant" or "cosine" (per step).
        seed (int): Seed of the training substreams.
        checkpoint_every (int): Checkpoint cadence in epochs.
        augmentations (tuple[str, ...]): Subset of {"horizontal_flip", "pad_crop"}.
        ema_decay (Optional[float]): EMA decay of a shadow copy of the weights, None disables.
        grad_clip (Optional[float]): Gradient norm clipping threshold, None disables.
        workers (int): Batches prepared ahead by the producer thread.
    """

    # pylint: disable=too-many-arguments, too-many-positional-arguments
    # pylint: disable=too-many-instance-attributes
    def __init__(
        self,
        epochs: Optional[int] = None,
        batch_size: Optional[int] = None,
        learning_rate: Optional[float] = None,
        lr_schedule: Optional[str] = None,
        seed: Optional[int] = None,
        checkpoint_every: Optional[int] = None,
        augmentations: Optional[Iterable[str]] = None,
        ema_decay: Optional[float] = DEFAULT_EMA_DECAY,
        grad_clip: Optional[float] = DEFAULT_GRAD_CLIP,
        workers: Optional[int] = None,
    ) -> None:
        self._epochs = validate_non_negative_int("epochs", epochs, DEFAULT_EPOCHS)
        self._batch_size = validate_positive_int("batch_size", batch_size, DEFAULT_BATCH_SIZE)
        self._learning_rate = validate_positive_float(
            "learning_rate", learning_rate, DEFAULT_LEARNING_RATE
        )
        self._lr_schedule = validate_choice(
            "lr_schedule", lr_schedule, DEFAULT_LR_SCHEDULE, DEFAULT_LR_SCHEDULE_LIST
        )
        self._seed = validate_seed(seed, DEFAULT_SEED)
        self._checkpoint_every = validate_positive_int(
            "checkpoint_every", checkpoint_every, DEFAULT_CHECKPOINT_EVERY
        )
        self._augmentations = validate_choice_set(
            "augmentations", augmentations, DEFAULT_AUGMENTATIONS, DEFAULT_AUGMENTATION_LIST
        )
        self._ema_decay = validate_optional_fraction("ema_decay", ema_decay)
        self._grad_clip = _validate_optional_positive_float("grad_clip", grad_clip)
        self._workers = validate_positive_int("workers", workers, DEFAULT_LOADER_PREFETCH)

    @property
    def epochs(self) -> int:
        """Number of epochs."""
        return self._epochs

    @epochs.setter
    def epochs(self, value: int) -> None:
        self._epochs = validate_non_negative_int("epochs", value, DEFAULT_EPOCHS)

    @property
    def batch_size(self) -> int:
        """Images per optimization step."""
        return self._batch_size

    @batch_size.setter
    def batch_size(self, value: int) -> None:
        self._batch_size = validate_positive_int("batch_size", value, DEFAULT_BATCH_SIZE)

    @property
    def learning_rate(self) -> float:
        """Adam learning rate."""
        return self._learning_rate

    @learning_rate.setter
    def learning_rate(self, value: float) -> None:
        self._learning_rate = validate_positive_float(
            "learning_rate", value, DEFAULT_LEARNING_RATE
        )

    @property
    def lr_schedule(self) -> str:
        """Learning-rate schedule."""
        return self._lr_schedule

    @lr_schedule.setter
    def lr_schedule(self, value: str) -> None:
        self._lr_schedule = validate_choice(
            "lr_schedule", value, DEFAULT_LR_SCHEDULE, DEFAULT_LR_SCHEDULE_LIST
        )

    @property
    def seed(self) -> int:
        """Seed of the training random streams."""
        return self._seed

    @seed.setter
    def seed(self, value: int) -> None:
        self._seed = validate_seed(value, DEFAULT_SEED)

    @property
    def checkpoint_every(self) -> int:
        """Checkpoint cadence in epochs."""
        return self._checkpoint_every

    @checkpoint_every.setter
    def checkpoint_every(self, value: int) -> None:
        self._checkpoint_every = validate_positive_int(
            "checkpoint_every", value, DEFAULT_CHECKPOINT_EVERY
        )

    @property
    def augmentations(self) -> tuple[str, ...]:
        """Augmentations applied before noising."""
        return self._augmentations

    @augmentations.setter
    def augmentations(self, value: Iterable[str]) -> None:
        self._augmentations = validate_choice_set(
            "augmentations", value, DEFAULT_AUGMENTATIONS, DEFAULT_AUGMENTATION_LIST
        )

    @property
    def ema_decay(self) -> Optional[float]:
        """EMA decay, None when disabled."""
        return self._ema_decay

    @ema_decay.setter
    def ema_decay(self, value: Optional[float]) -> None:
        self._ema_decay = validate_optional_fraction("ema_decay", value)

    @property
    def grad_clip(self) -> Optional[float]:
        """Gradient clipping norm, None when disabled."""
        return self._grad_clip

    @grad_clip.setter
    def grad_clip(self, value: Optional[float]) -> None:
        self._grad_clip = _validate_optional_positive_float("grad_clip", value)

    @property
    def workers(self) -> int:
        """Prefetch depth of the batch producer."""
        return self._workers

    @workers.setter
    def workers(self, value: int) -> None:
        self._workers = validate_positive_int("workers", value, DEFAULT_LOADER_PREFETCH)

    def to_dict(self) -> dict:
        return {
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "lr_schedule": self.lr_schedule,
            "seed": self.seed,
            "checkpoint_every": self.checkpoint_every,
            "augmentations": list(self.augmentations),
            "ema_decay": self.ema_decay,
            "grad_clip": self.grad_clip,
            "workers": self.workers,
        }


class ProbeOpts(ConfigModel):
    """
    Options shared by linear probing, grid search, fine-tuning and training from scratch.

    Properties:
        epochs (int): Training epochs of the head (or of the whole encoder when fine-tuning).
        batch_size (int): Rows per step.
        learning_rate (float): Adam learning rate.
        lr_schedule (str): "constant" or "cosine".
        warmup_epochs (int): Linear warm-up epochs before the schedule.
        augmentations (tuple[str, ...]): Augmentations of the images before feature extraction.
        holdout_fraction (float): Held-out share when no test split exists.
        renoise_each_epoch (bool): Draw fresh noise every probe epoch (False freezes one copy).
        noising (str): "random" or "none".
        refine_stride (Optional[int]): Coarse-to-fine grid stride, None searches every t.
        workers (int): Grid cells probed concurrently.
        weight_decay (float): Adam weight decay.
        seed (int): Seed of the probe substreams.
    """

    # pylint: disable=too-many-arguments, too-many-positional-arguments
    # pylint: disable=too-many-instance-attributes
    def __init__(
        self,
        epochs: Optional[int] = None,
        batch_size: Optional[int] = None,
        learning_rate: Optional[float] = None,
        lr_schedule: Optional[str] = None,
        warmup_epochs: Optional[int] = None,
        augmentations: Optional[Iterable[str]] = None,
        holdout_fraction: Optional[float] = None,
        renoise_each_epoch: Optional[bool] = None,
        noising: Optional[str] = None,
        refine_stride: Optional[int] = DEFAULT_REFINE_STRIDE,
        workers: Optional[int] = None,
        weight_decay: Optional[float] = None,
        seed: Optional[int] = None,
    ) -> None:
        self._epochs = validate_non_negative_int("epochs", epochs, DEFAULT_PROBE_EPOCHS)
        self._batch_size = validate_positive_int(
            "batch_size", batch_size, DEFAULT_PROBE_BATCH_SIZE
        )
        self._learning_rate = validate_positive_float(
            "learning_rate", learning_rate, DEFAULT_PROBE_LEARNING_RATE
        )
        self._lr_schedule = validate_choice(
            "lr_schedule", lr_schedule, DEFAULT_PROBE_LR_SCHEDULE, DEFAULT_LR_SCHEDULE_LIST
        )
        self._warmup_epochs = validate_non_negative_int(
            "warmup_epochs", warmup_epochs, DEFAULT_PROBE_WARMUP_EPOCHS
        )
        self._augmentations = validate_choice_set(
            "augmentations", augmentations, DEFAULT_PROBE_AUGMENTATIONS, DEFAULT_AUGMENTATION_LIST
        )
        self._holdout_fraction = validate_fraction(
            "holdout_fraction", holdout_fraction, DEFAULT_HOLDOUT_FRACTION
        )
        self._renoise_each_epoch = validate_bool(
            "renoise_each_epoch", renoise_each_epoch, DEFAULT_RENOISE_EACH_EPOCH
        )
        self._noising = validate_choice("noising", noising, DEFAULT_NOISING, DEFAULT_NOISING_LIST)
        self._refine_stride = validate_optional_positive_int("refine_stride", refine_stride)
        self._workers = validate_positive_int("workers", workers, DEFAULT_WORKERS)
        self._weight_decay = validate_non_negative_float(
            "weight_decay", weight_decay, DEFAULT_PROBE_WEIGHT_DECAY
        )
        self._seed = validate_seed(seed, DEFAULT_SEED)

    @property
    def epochs(self) -> int:
        """Training epochs."""
        return self._epochs

    @epochs.setter
    def epochs(self, value: int) -> None:
        self._epochs = validate_non_negative_int("epochs", value, DEFAULT_PROBE_EPOCHS)

    @property
    def batch_size(self) -> int:
        """Rows per step."""
        return self._batch_size

    @batch_size.setter
    def batch_size(self, value: int) -> None:
        self._batch_size = validate_positive_int("batch_size", value, DEFAULT_PROBE_BATCH_SIZE)

    @property
    def learning_rate(self) -> float:
        """Adam learning rate."""
        return self._learning_rate

    @learning_rate.setter
    def learning_rate(self, value: float) -> None:
        self._learning_rate = validate_positive_float(
            "learning_rate", value, DEFAULT_PROBE_LEARNING_RATE
        )

    @property
    def lr_schedule(self) -> str:
        """Learning-rate schedule."""
        return self._lr_schedule

    @lr_schedule.setter
    def lr_schedule(self, value: str) -> None:
        self._lr_schedule = validate_choice(
            "lr_schedule", value, DEFAULT_PROBE_LR_SCHEDULE, DEFAULT_LR_SCHEDULE_LIST
        )

    @property
    def warmup_epochs(self) -> int:
        """Linear warm-up epochs."""
        return self._warmup_epochs

    @warmup_epochs.setter
    def warmup_epochs(self, value: int) -> None:
        self._warmup_epochs = validate_non_negative_int(
            "warmup_epochs", value, DEFAULT_PROBE_WARMUP_EPOCHS
        )

    @property
    def augmentations(self) -> tuple[str, ...]:
        """Augmentations of the probe training images."""
        return self._augmentations

    @augmentations.setter
    def augmentations(self, value: Iterable[str]) -> None:
        self._augmentations = validate_choice_set(
            "augmentations", value, DEFAULT_PROBE_AUGMENTATIONS, DEFAULT_AUGMENTATION_LIST
        )

    @property
    def holdout_fraction(self) -> float:
        """Held-out share used when there is no test split."""
        return self._holdout_fraction

    @holdout_fraction.setter
    def holdout_fraction(self, value: float) -> None:
        self._holdout_fraction = validate_fraction(
            "holdout_fraction", value, DEFAULT_HOLDOUT_FRACTION
        )

    @property
    def renoise_each_epoch(self) -> bool:
        """Re-noise the training images every epoch."""
        return self._renoise_each_epoch

    @renoise_each_epoch.setter
    def renoise_each_epoch(self, value: bool) -> None:
        self._renoise_each_epoch = validate_bool(
            "renoise_each_epoch", value, DEFAULT_RENOISE_EACH_EPOCH
        )

    @property
    def noising(self) -> str:
        """Feature extraction noising mode."""
        return self._noising

    @noising.setter
    def noising(self, value: str) -> None:
        self._noising = validate_choice("noising", value, DEFAULT_NOISING, DEFAULT_NOISING_LIST)

    @property
    def refine_stride(self) -> Optional[int]:
        """Coarse grid stride, None for an exhaustive search."""
        return self._refine_stride

    @refine_stride.setter
    def refine_stride(self, value: Optional[int]) -> None:
        self._refine_stride = validate_optional_positive_int("refine_stride", value)

    @property
    def workers(self) -> int:
        """Concurrent grid cells."""
        return self._workers

    @workers.setter
    def workers(self, value: int) -> None:
        self._workers = validate_positive_int("workers", value, DEFAULT_WORKERS)

    @property
    def weight_decay(self) -> float:
        """Adam weight decay."""
        return self._weight_decay

    @weight_decay.setter
    def weight_decay(self, value: float) -> None:
        self._weight_decay = validate_non_negative_float(
            "weight_decay", value, DEFAULT_PROBE_WEIGHT_DECAY
        )

    @property
    def seed(self) -> int:
        """Seed of the probe random streams."""
        return self._seed

    @seed.setter
    def seed(self, value: int) -> None:
        self._seed = validate_seed(value, DEFAULT_SEED)

    def to_dict(self) -> dict:
        return {
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "lr_schedule": self.lr_schedule,
            "warmup_epochs": self.warmup_epochs,
            "augmentations": list(self.augmentations),
            "holdout_fraction": self.holdout_fraction,
            "renoise_each_epoch": self.renoise_each_epoch,
            "noising": self.noising,
            "refine_stride": self.refine_stride,
            "workers": self.workers,
            "weight_decay": self.weight_decay,
            "seed": self.seed,
        }


class MetricOpts(ConfigModel):
    """
    Representation metric options.

    Properties:
        n_pairs (int): Pairs drawn for alignment and uniformity.
        shared_noise (bool): One noise draw shared inside a uniformity pair.
        fid_embedder (str): "pca" (pixel PCA) or "encoder" (probe encoder of a reference model).
        fid_samples (int): Generated images per FID evaluation.
        pca_components (int): Dimension of the pixel PCA embedder.
        classifier_hidden (int): Hidden width of the noise-conditional classifier head.
        classifier_epochs (int): Training epochs of that head.
        guidance_scaling (str): "variance" (s * Sigma_t^2) or "std" (s * Sigma_t).
    """

    # pylint: disable=too-many-arguments, too-many-positional-arguments
    def __init__(
        self,
        n_pairs: Optional[int] = None,
        shared_noise: Optional[bool] = None,
        fid_embedder: Optional[str] = None,
        fid_samples: Optional[int] = None,
        pca_components: Optional[int] = None,
        classifier_hidden: Optional[int] = None,
        classifier_epochs: Optional[int] = None,
        guidance_scaling: Optional[str] = None,
    ) -> None:
        self._n_pairs = validate_positive_int("n_pairs", n_pairs, DEFAULT_METRIC_PAIRS)
        self._shared_noise = validate_bool("shared_noise", shared_noise, DEFAULT_SHARED_NOISE)
        self._fid_embedder = validate_choice(
            "fid_embedder", fid_embedder, DEFAULT_FID_EMBEDDER, DEFAULT_FID_EMBEDDER_LIST
        )
        self._fid_samples = validate_positive_int("fid_samples", fid_samples, DEFAULT_FID_SAMPLES)
        self._pca_components = validate_positive_int(
            "pca_components", pca_components, DEFAULT_PCA_COMPONENTS
        )
        self._classifier_hidden = validate_positive_int(
            "classifier_hidden", classifier_hidden, DEFAULT_CLASSIFIER_HIDDEN
        )
        self._classifier_epochs = validate_non_negative_int(
            "classifier_epochs", classifier_epochs, DEFAULT_CLASSIFIER_EPOCHS
        )
        self._guidance_scaling = validate_choice(
            "guidance_scaling",
            guidance_scaling,
            DEFAULT_GUIDANCE_SCALING,
            DEFAULT_GUIDANCE_SCALING_LIST,
        )

    @property
    def n_pairs(self) -> int:
        """Pairs per alignment / uniformity estimate."""
        return self._n_pairs

    @n_pairs.setter
    def n_pairs(self, value: int) -> None:
        self._n_pairs = validate_positive_int("n_pairs", value, DEFAULT_METRIC_PAIRS)

    @property
    def shared_noise(self) -> bool:
        """Share one noise draw inside a uniformity pair."""
        return self._shared_noise

    @shared_noise.setter
    def shared_noise(self, value: bool) -> None:
        self._shared_noise = validate_bool("shared_noise", value, DEFAULT_SHARED_NOISE)

    @property
    def fid_embedder(self) -> str:
        """FID embedder kind."""
        return self._fid_embedder

    @fid_embedder.setter
    def fid_embedder(self, value: str) -> None:
        self._fid_embedder = validate_choice(
            "fid_embedder", value, DEFAULT_FID_EMBEDDER, DEFAULT_FID_EMBEDDER_LIST
        )

    @property
    def fid_samples(self) -> int:
        """Generated images per FID evaluation."""
        return self._fid_samples

    @fid_samples.setter
    def fid_samples(self, value: int) -> None:
        self._fid_samples = validate_positive_int("fid_samples", value, DEFAULT_FID_SAMPLES)

    @property
    def pca_components(self) -> int:
        """Pixel PCA dimension."""
        return self._pca_components

    @pca_components.setter
    def pca_components(self, value: int) -> None:
        self._pca_components = validate_positive_int(
            "pca_components", value, DEFAULT_PCA_COMPONENTS
        )

    @property
    def classifier_hidden(self) -> int:
        """Hidden width of the classifier head."""
        return self._classifier_hidden

    @classifier_hidden.setter
    def classifier_hidden(self, value: int) -> None:
        self._classifier_hidden = validate_positive_int(
            "classifier_hidden", value, DEFAULT_CLASSIFIER_HIDDEN
        )

    @property
    def classifier_epochs(self) -> int:
        """Training epochs of the classifier head."""
        return self._classifier_epochs

    @classifier_epochs.setter
    def classifier_epochs(self, value: int) -> None:
        self._classifier_epochs = validate_non_negative_int(
            "classifier_epochs", value, DEFAULT_CLASSIFIER_EPOCHS
        )

    @property
    def guidance_scaling(self) -> str:
        """Guidance gradient scaling."""
        return self._guidance_scaling

    @guidance_scaling.setter
    def guidance_scaling(self, value: str) -> None:
        self._guidance_scaling = validate_choice(
            "guidance_scaling", value, DEFAULT_GUIDANCE_SCALING, DEFAULT_GUIDANCE_SCALING_LIST
        )

    def to_dict(self) -> dict:
        return {
            "n_pairs": self.n_pairs,
            "shared_noise": self.shared_noise,
            "fid_embedder": self.fid_embedder,
            "fid_samples": self.fid_samples,
            "pca_components": self.pca_components,
            "classifier_hidden": self.classifier_hidden,
            "classifier_epochs": self.classifier_epochs,
            "guidance_scaling": self.guidance_scaling,
        }


SubConfig = Union[ConfigModel, dict, None]


def _sub_config(cls: type, value: SubConfig, name: str) -> Any:
    if value is None:
        return cls()
    if isinstance(value, cls):
        return value
    if isinstance(value, dict):
        return cls.from_dict(value)
    raise DDAEConfigError(f"{name} must be a {cls.__name__} or a mapping, got {type(value)}")


def _validate_optional_str(name: str, value: Optional[str]) -> Optional[str]:
    if value is None:
        return None
    if not isinstance(value, str) or not value:
        raise DDAEConfigError(f"{name} must be a non-empty string, got {value!r}")
    return value


def _validate_str_tuple(name: str, value: Optional[Sequence[str]]) -> tuple[str, ...]:
    if value is None:
        return ()
    if isinstance(value, str):
        raise DDAEConfigError(f"{name} must be a list of strings, got a string")
    items = tuple(value)
    for item in items:
        _validate_optional_str(name, item)
    return items


class RunConfig(ConfigModel):
    """
    Complete description of a run.

    Two runs with semantically equal configurations share `config_hash` whatever the key order
    of the files they were read from.

    Properties:
        schedule (ScheduleConfig), network (DDAEConfig), train (TrainOpts), probe (ProbeOpts),
        metrics (MetricOpts): Sub-configurations.
        taps (tuple[str, ...]): Tap keys searched by the grid, empty for every up-path tap.
        timesteps (tuple[int, ...]): Levels searched by the grid, empty for a default ladder.
        tap (Optional[str]), t_fixed (Optional[int]): Adopted layer-noise combination used by
            probe, finetune and metrics when no grid report is given.
        dataset_path, test_path, labels_csv (Optional[str]): Inputs.
        dataset_format (str): "cifar10" or "png".
        out_dir (str): Output directory.
        seed (int): Master seed.
        preset (str): Preset the configuration was derived from.
        limit (Optional[int]): Use only the first `limit` training images.
    """

    # pylint: disable=too-many-arguments, too-many-positional-arguments
    # pylint: disable=too-many-instance-attributes
    # pylint: disable=too-many-locals
    def __init__(
        self,
        schedule: SubConfig = None,
        network: SubConfig = None,
        train: SubConfig = None,
        probe: SubConfig = None,
        metrics: SubConfig = None,
        taps: Optional[Sequence[str]] = None,
        timesteps: Optional[Sequence[int]] = None,
        tap: Optional[str] = None,
        t_fixed: Optional[int] = None,
        dataset_path: Optional[str] = None,
        dataset_format: Optional[str] = None,
        test_path: Optional[str] = None,
        labels_csv: Optional[str] = None,
        out_dir: Optional[str] = None,
        seed: Optional[int] = None,
        preset: Optional[str] = None,
        limit: Optional[int] = None,
    ) -> None:
        self.schedule: ScheduleConfig = _sub_config(ScheduleConfig, schedule, "schedule")
        self.network: DDAEConfig = _sub_config(DDAEConfig, network, "network")
        self.train: TrainOpts = _sub_config(TrainOpts, train, "train")
        self.probe: ProbeOpts = _sub_config(ProbeOpts, probe, "probe")
        self.metrics: MetricOpts = _sub_config(MetricOpts, metrics, "metrics")
        self._taps = _validate_str_tuple("taps", taps)
        self._timesteps = validate_int_tuple("timesteps", timesteps, (), allow_empty=True)
        self._tap = _validate_optional_str("tap", tap)
        self._t_fixed = validate_optional_positive_int("t_fixed", t_fixed)
        self._dataset_path = _validate_optional_str("dataset_path", dataset_path)
        self._dataset_format = validate_choice(
            "dataset_format", dataset_format, DEFAULT_DATASET_FORMAT, DEFAULT_DATASET_FORMAT_LIST
        )
        self._test_path = _validate_optional_str("test_path", test_path)
        self._labels_csv = _validate_optional_str("labels_csv", labels_csv)
        self._out_dir = _validate_optional_str("out_dir", out_dir) or DEFAULT_OUT_DIR
        self._seed = validate_seed(seed, DEFAULT_SEED)
        self._preset = _validate_optional_str("preset", preset) or DEFAULT_PRESET
        self._limit = validate_optional_positive_int("limit", limit)
        self._check_levels()

    def _check_levels(self) -> None:
        levels = self.schedule.levels
        for name, values in (("timesteps", self._timesteps), ("t_fixed", (self._t_fixed,))):
            for value in values:
                if value is not None and value > levels:
                    raise DDAEConfigError(
                        f"{name} value {value} exceeds the number of levels {levels}"
                    )

    @property
    def taps(self) -> tuple[str, ...]:
        """Tap keys searched by the grid."""
        return self._taps

    @taps.setter
    def taps(self, value: Sequence[str]) -> None:
        self._taps = _validate_str_tuple("taps", value)

    @property
    def timesteps(self) -> tuple[int, ...]:
        """Levels searched by the grid."""
        return self._timesteps

    @timesteps.setter
    def timesteps(self, value: Sequence[int]) -> None:
        self._timesteps = validate_int_tuple("timesteps", value, (), allow_empty=True)
        self._check_levels()

    @property
    def tap(self) -> Optional[str]:
        """Adopted tap key."""
        return self._tap

    @tap.setter
    def tap(self, value: Optional[str]) -> None:
        self._tap = _validate_optional_str("tap", value)

    @property
    def t_fixed(self) -> Optional[int]:
        """Adopted level."""
        return self._t_fixed

    @t_fixed.setter
    def t_fixed(self, value: Optional[int]) -> None:
        self._t_fixed = validate_optional_positive_int("t_fixed", value)
        self._check_levels()

    @property
    def dataset_path(self) -> Optional[str]:
        """Training data (file or directory)."""
        return self._dataset_path

    @dataset_path.setter
    def dataset_path(self, value: Optional[str]) -> None:
        self._dataset_path = _validate_optional_str("dataset_path", value)

    @property
    def dataset_format(self) -> str:
        """Dataset format."""
        return self._dataset_format

    @dataset_format.setter
    def dataset_format(self, value: str) -> None:
        self._dataset_format = validate_choice(
            "dataset_format", value, DEFAULT_DATASET_FORMAT, DEFAULT_DATASET_FORMAT_LIST
        )

    @property
    def test_path(self) -> Optional[str]:
        """Designated test split."""
        return self._test_path

    @test_path.setter
    def test_path(self, value: Optional[str]) -> None:
        self._test_path = _validate_optional_str("test_path", value)

    @property
    def labels_csv(self) -> Optional[str]:
        """Label file of a PNG directory."""
        return self._labels_csv

    @labels_csv.setter
    def labels_csv(self, value: Optional[str]) -> None:
        self._labels_csv = _validate_optional_str("labels_csv", value)

    @property
    def out_dir(self) -> str:
        """Output directory."""
        return self._out_dir

    @out_dir.setter
    def out_dir(self, value: str) -> None:
        self._out_dir = _validate_optional_str("out_dir", value) or DEFAULT_OUT_DIR

    @property
    def seed(self) -> int:
        """Master seed."""
        return self._seed

    @seed.setter
    def seed(self, value: int) -> None:
        self._seed = validate_seed(value, DEFAULT_SEED)

    @property
    def preset(self) -> str:
        """Name of the originating preset."""
        return self._preset

    @preset.setter
    def preset(self, value: str) -> None:
        self._preset = _validate_optional_str("preset", value) or DEFAULT_PRESET

    @property
    def limit(self) -> Optional[int]:
        """Training image cap."""
        return self._limit

    @limit.setter
    def limit(self, value: Optional[int]) -> None:
        self._limit = validate_optional_positive_int("limit", value)

    @property
    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON form."""
        return self.digest()

    @property
    def run_id(self) -> str:
        """Short run identifier derived from the configuration hash."""
        return self.config_hash[:12]

    def default_timesteps(self) -> tuple[int, ...]:
        """
        Levels searched when `timesteps` is empty.

        A geometric ladder from 1 to T (at most 8 rungs); small levels are densely covered since
        the interesting features live at low noise.
        """
        if self._timesteps:
            return self._timesteps
        levels = self.schedule.levels
        rungs = min(8, levels)
        if rungs == 1:
            return (1,)
        ladder = {round(levels ** (i / (rungs - 1))) for i in range(rungs)}
        return tuple(sorted(min(max(t, 1), levels) for t in ladder))

    def to_dict(self) -> dict:
        return {
            "schedule": self.schedule.to_dict(),
            "network": self.network.to_dict(),
            "train": self.train.to_dict(),
            "probe": self.probe.to_dict(),
            "metrics": self.metrics.to_dict(),
            "taps": list(self.taps),
            "timesteps": list(self.timesteps),
            "tap": self.tap,
            "t_fixed": self.t_fixed,
            "dataset_path": self.dataset_path,
            "dataset_format": self.dataset_format,
            "test_path": self.test_path,
            "labels_csv": self.labels_csv,
            "out_dir": self.out_dir,
            "seed": self.seed,
            "preset": self.preset,
            "limit": self.limit,
        }
