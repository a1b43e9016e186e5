"""
Feature tables.

A feature table holds one globally pooled tap activation per image. With ``noising="random"``
every image is corrupted once at the level t before the forward pass; with ``"none"`` the clean
image is passed together with the level.

Classes:
    - FeatureTable: Features, labels and where they came from.

Functions:
    - extract_features(net, tap, t, dataset, sched, generator, noising="random") -> FeatureTable
    - extract_pixel_features(dataset) -> FeatureTable
"""

from dataclasses import dataclass
from logging import Logger, getLogger
from pathlib import Path
from typing import Optional, Union

import torch

from ..backbone import DDAENetwork, TapId, global_average_pool, load_container, save_container
from ..config.defaults import DEFAULT_NOISING_LIST
from ..corruption import ImageBatch, NoiseSchedule, noise
from ..exceptions import ContractError, DDAEConfigError, NumericalError

DEFAULT_EXTRACT_BATCH: int = 256


@dataclass
class FeatureTable:
    """
    Pooled features of a labelled image set.

    Attributes:
        features (torch.Tensor): float32 [N, D], finite.
        labels (torch.Tensor): int64 [N].
        num_classes (int): Label range.
        tap (Optional[TapId]): Source tap, None for raw pixels.
        t (Optional[int]): Level the images were noised / conditioned at.
        noising (str): "random" or "none".
        seed (Optional[int]): Seed of the noise draw.
    """

    features: torch.Tensor
    labels: torch.Tensor
    num_classes: int
    tap: Optional[TapId] = None
    t: Optional[int] = None
    noising: str = "none"
    seed: Optional[int] = None

    def __post_init__(self) -> None:
        if self.features.dim() != 2:
            raise ContractError(f"Features must be [N, D], got {tuple(self.features.shape)}")
        if self.labels.shape != (self.features.shape[0],):
            raise ContractError(
                f"{tuple(self.labels.shape)} labels for {self.features.shape[0]} feature rows"
            )
        if self.features.numel() and not bool(torch.isfinite(self.features).all()):
            raise NumericalError("Feature table contains non-finite values", {"tap": str(self.tap)})

    def __len__(self) -> int:
        return int(self.features.shape[0])

    @property
    def dim(self) -> int:
        """Feature width D."""
        return int(self.features.shape[1])

    def subset(self, index: torch.Tensor) -> "FeatureTable":
        """Rows selected by `index`."""
        return FeatureTable(
            self.features[index], self.labels[index], self.num_classes, self.tap, self.t,
            self.noising, self.seed,
        )

    def scaled(self, factor: float) -> "FeatureTable":
        """Copy with every feature multiplied by `factor`."""
        return FeatureTable(
            self.features * factor, self.labels, self.num_classes, self.tap, self.t,
            self.noising, self.seed,
        )

    def save(self, path: Union[str, Path], logger: Optional[Logger] = None) -> None:
        """Store as container arrays ``features`` / ``labels``."""
        metadata = {
            "num_classes": str(self.num_classes),
            "tap": "" if self.tap is None else self.tap.key,
            "t": "" if self.t is None else str(self.t),
            "noising": self.noising,
            "seed": "" if self.seed is None else str(self.seed),
        }
        save_container(path, {"features": self.features, "labels": self.labels}, metadata, logger)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "FeatureTable":
        """Read a table written by `save`."""
        arrays, metadata = load_container(path)
        return cls(
            features=arrays["features"],
            labels=arrays["labels"],
            num_classes=int(metadata["num_classes"]),
            tap=TapId.parse(metadata["tap"]) if metadata.get("tap") else None,
            t=int(metadata["t"]) if metadata.get("t") else None,
            noising=metadata.get("noising", "none"),
            seed=int(metadata["seed"]) if metadata.get("seed") else None,
        )


def _labels_of(dataset: ImageBatch) -> tuple[torch.Tensor, int]:
    if dataset.labels is None:
        raise ContractError("Feature extraction needs a labelled dataset")
    return dataset.labels, int(dataset.num_classes or 0)


# pylint: disable=too-many-arguments, too-many-positional-arguments, too-many-locals
@torch.no_grad()
def extract_features(
    net: DDAENetwork,
    tap: Union[TapId, str],
    t: int,
    dataset: ImageBatch,
    sched: NoiseSchedule,
    generator: Optional[torch.Generator] = None,
    noising: str = "random",
    batch_size: int = DEFAULT_EXTRACT_BATCH,
    seed: Optional[int] = None,
    logger: Optional[Logger] = None,
) -> FeatureTable:
    """
    Pooled activations at (tap, t) for every image of `dataset`.

    Network weights are only read; the network is evaluated in eval mode and its previous mode is
    restored.

    Args:
        net (DDAENetwork): Network (full or truncated past `tap`).
        tap (Union[TapId, str]): Feature site.
        t (int): Level in [1, T].
        dataset (ImageBatch): Labelled images.
        sched (NoiseSchedule): Schedule used for noising.
        generator (Optional[torch.Generator]): CPU noise stream; required for random noising.
        noising (str): "random" or "none".
        batch_size (int): Forward batch size.
        seed (Optional[int]): Recorded in the table.
        logger (Optional[Logger]): Logger, module logger when None.

    Raises:
        UnknownTapError: Tap not in the network.
        ContractError: Level outside [1, T] or missing labels.
        DDAEConfigError: Unknown noising mode or missing generator.
    """
    logger = logger if isinstance(logger, Logger) else getLogger(__name__)
    if noising not in DEFAULT_NOISING_LIST:
        raise DDAEConfigError(f"noising must be one of {DEFAULT_NOISING_LIST}, got {noising!r}")
    if noising == "random" and generator is None:
        raise DDAEConfigError("Random noising needs a generator")
    resolved = net.tap(tap)
    t = sched.check_level(t)
    labels, num_classes = _labels_of(dataset)
    device = next(net.parameters()).device
    was_training = net.training
    net.eval()
    chunks = []
    try:
        for start in range(0, len(dataset), batch_size):
            x0 = dataset.data[start : start + batch_size]
            if noising == "random":
                eps = torch.randn(x0.shape, generator=generator, dtype=x0.dtype)
                x = noise(x0, t, eps, sched)
            else:
                x = x0
            activation = net.activations(x.to(device), t, [resolved])[resolved.key]
            chunks.append(global_average_pool(activation).float().cpu())
    finally:
        net.train(was_training)
    width = net.tap_channels(resolved)
    features = torch.cat(chunks) if chunks else torch.zeros(0, width)
    logger.debug("Extracted %s features at %s, t=%d", tuple(features.shape), resolved.key, t)
    return FeatureTable(features, labels.clone(), num_classes, resolved, t, noising, seed)


def extract_pixel_features(dataset: ImageBatch) -> FeatureTable:
    """Raw pixels flattened to [N, C*S*S], the no-network baseline."""
    labels, num_classes = _labels_of(dataset)
    features = dataset.data.reshape(len(dataset), -1).float().clone()
    return FeatureTable(features, labels.clone(), num_classes)
