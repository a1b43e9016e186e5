"""
Image batch container.

`ImageBatch` is the unit every operation of the package consumes: square images scaled to
[-1, 1] in NCHW layout, with optional integer class labels.

Classes:
    - ImageBatch: Validated images + labels, with subset / split helpers.

Functions:
    - as_tensor(images) -> torch.Tensor: Accept an ImageBatch or a raw tensor.
"""

from dataclasses import dataclass, field
from typing import Optional, Union

import torch

from ..exceptions import ContractError


@dataclass
class ImageBatch:
    """
    A batch (or a whole dataset) of images.

    Attributes:
        data (torch.Tensor): Float tensor [N, C, H, W], values in [-1, 1], H == W.
        labels (Optional[torch.Tensor]): int64 tensor [N] of class indices.
        num_classes (Optional[int]): Number of classes the labels index into.
    """

    data: torch.Tensor
    labels: Optional[torch.Tensor] = None
    num_classes: Optional[int] = field(default=None)

    def __post_init__(self) -> None:
        if not isinstance(self.data, torch.Tensor) or self.data.dim() != 4:
            raise ContractError("ImageBatch data must be a 4-D tensor [N, C, H, W]")
        if not self.data.dtype.is_floating_point:
            raise ContractError(f"ImageBatch data must be floating point, got {self.data.dtype}")
        if self.data.shape[2] != self.data.shape[3]:
            raise ContractError(
                f"ImageBatch images must be square, got {tuple(self.data.shape[2:])}"
            )
        if self.data.numel() and not bool(torch.isfinite(self.data).all()):
            raise ContractError("ImageBatch data contains non-finite values")
        if self.labels is not None:
            self.labels = torch.as_tensor(self.labels, dtype=torch.int64).reshape(-1)
            if self.labels.numel() != self.data.shape[0]:
                raise ContractError(
                    f"{self.labels.numel()} labels for {self.data.shape[0]} images"
                )
            if self.num_classes is None:
                self.num_classes = int(self.labels.max()) + 1 if self.labels.numel() else 0
            if self.labels.numel() and (
                int(self.labels.min()) < 0 or int(self.labels.max()) >= self.num_classes
            ):
                raise ContractError(f"Labels outside [0, {self.num_classes})")

    def __len__(self) -> int:
        return int(self.data.shape[0])

    @property
    def image_size(self) -> int:
        """Spatial side length."""
        return int(self.data.shape[-1])

    @property
    def channels(self) -> int:
        """Number of channels."""
        return int(self.data.shape[1])

    def subset(self, index: Union[torch.Tensor, slice, list]) -> "ImageBatch":
        """Rows selected by `index` (labels follow)."""
        labels = None if self.labels is None else self.labels[index]
        return ImageBatch(self.data[index], labels, self.num_classes)

    def split(
        self, fraction: float, generator: torch.Generator
    ) -> tuple["ImageBatch", "ImageBatch"]:
        """
        Seeded random split.

        Args:
            fraction (float): Share of rows placed in the second part, in (0, 1).
            generator (torch.Generator): Random stream deciding the permutation.

        Returns:
            tuple[ImageBatch, ImageBatch]: (kept, held out). The held-out part has at least one
            row when the batch has two or more rows.
        """
        count = len(self)
        permutation = torch.randperm(count, generator=generator)
        held = min(max(int(round(count * fraction)), 1 if count > 1 else 0), max(count - 1, 0))
        return self.subset(permutation[held:]), self.subset(permutation[:held])

    def to(self, device: Union[str, torch.device]) -> "ImageBatch":
        """Copy to a device."""
        labels = None if self.labels is None else self.labels.to(device)
        return ImageBatch(self.data.to(device), labels, self.num_classes)


def as_tensor(images: Union[ImageBatch, torch.Tensor]) -> torch.Tensor:
    """Return the pixel tensor of an ImageBatch, or the tensor itself."""
    if isinstance(images, ImageBatch):
        return images.data
    if isinstance(images, torch.Tensor):
        return images
    raise ContractError(f"Expected ImageBatch or tensor, got {type(images)}")
