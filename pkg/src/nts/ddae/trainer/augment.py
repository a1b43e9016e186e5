"""
Image augmentations applied before noising.

Both transforms draw from an explicit `torch.Generator` so that a seeded run sees the same
augmented batches every time.

Functions:
    - horizontal_flip(x, generator, p=0.5) -> torch.Tensor
    - pad_crop(x, generator, padding=4, fill=-1.0) -> torch.Tensor
    - augment(x, names, generator) -> torch.Tensor
"""

from typing import Iterable

import torch
import torch.nn.functional as F

from ..config.defaults import DEFAULT_PAD_CROP_PADDING
from ..exceptions import DDAEConfigError


def horizontal_flip(x: torch.Tensor, generator: torch.Generator, p: float = 0.5) -> torch.Tensor:
    """Mirror each image left-right with probability p."""
    flip = torch.rand(x.shape[0], generator=generator) < p
    if not bool(flip.any()):
        return x
    out = x.clone()
    index = flip.nonzero().reshape(-1).to(x.device)
    out[index] = torch.flip(x[index], dims=(3,))
    return out


def pad_crop(
    x: torch.Tensor,
    generator: torch.Generator,
    padding: int = DEFAULT_PAD_CROP_PADDING,
    fill: float = -1.0,
) -> torch.Tensor:
    """
    Pad by `padding` pixels on every side and crop back to the original size at a random offset.

    The fill value -1 is black on the [-1, 1] pixel scale.
    """
    if padding == 0:
        return x
    size_h, size_w = x.shape[2], x.shape[3]
    padded = F.pad(x, (padding, padding, padding, padding), value=fill)
    offsets = torch.randint(0, 2 * padding + 1, (x.shape[0], 2), generator=generator).tolist()
    crops = [
        padded[n, :, top : top + size_h, left : left + size_w]
        for n, (top, left) in enumerate(offsets)
    ]
    return torch.stack(crops) if crops else x


_TRANSFORMS = {"horizontal_flip": horizontal_flip, "pad_crop": pad_crop}


def augment(x: torch.Tensor, names: Iterable[str], generator: torch.Generator) -> torch.Tensor:
    """
    Apply the named augmentations in a fixed order (flip, then pad-crop).

    Raises:
        DDAEConfigError: Unknown augmentation.
    """
    names = set(names)
    unknown = names - set(_TRANSFORMS)
    if unknown:
        raise DDAEConfigError(f"Unknown augmentations {sorted(unknown)}")
    for name in ("horizontal_flip", "pad_crop"):
        if name in names:
            x = _TRANSFORMS[name](x, generator)
    return x
