"""
Truncated feature encoders.

Classes:
    - Encoder: Network truncated at a tap, run at a fixed level, globally average pooled.

Functions:
    - truncate(net, tap, t_fixed) -> Encoder
    - global_average_pool(activation) -> torch.Tensor
"""

from typing import Optional, Union

import torch
from torch import nn

from .taps import TapId
from .unet import DDAENetwork, TapLike
from ..exceptions import ContractError


def global_average_pool(activation: torch.Tensor) -> torch.Tensor:
    """Mean over the spatial dimensions: [N, C, H, W] -> [N, C]."""
    return activation.mean(dim=(2, 3))


class Encoder(nn.Module):
    """
    f_t(x): pooled activation of a truncated network.

    The level is a constant input (a buffer, never trained). `forward(x)` encodes at `t_fixed`;
    passing `t` evaluates the same weights at another level, which the noise-conditional
    classifier relies on.

    Attributes:
        network (DDAENetwork): Truncated copy of the source network.
        tap (TapId): Tap the features are read from.
        t_fixed (int): Level used when none is given.
        feature_dim (int): Output width (channel count of the tap).
    """

    def __init__(self, network: DDAENetwork, tap: TapId, t_fixed: int) -> None:
        super().__init__()
        if network.truncated_at != tap.key:
            raise ContractError(f"Network is truncated at {network.truncated_at}, not {tap.key}")
        if isinstance(t_fixed, bool) or not isinstance(t_fixed, int) or t_fixed < 1:
            raise ContractError(f"t_fixed must be a positive integer, got {t_fixed!r}")
        if network.levels is not None and t_fixed > network.levels:
            raise ContractError(f"t_fixed {t_fixed} outside [1, {network.levels}]")
        self.network = network
        self.tap = tap
        self.t_fixed = t_fixed
        self.register_buffer("t_input", torch.tensor([t_fixed], dtype=torch.int64))
        self.feature_dim = network.tap_channels(tap)

    def activation(
        self, x: torch.Tensor, t: Optional[Union[int, torch.Tensor]] = None
    ) -> torch.Tensor:
        """Unpooled tap activation [N, C, r, r]."""
        level = self.t_input if t is None else t
        return self.network.activations(x, level, [self.tap])[self.tap.key]

    def forward(
        self, x: torch.Tensor, t: Optional[Union[int, torch.Tensor]] = None
    ) -> torch.Tensor:
        return global_average_pool(self.activation(x, t))

    def encode(self, x: torch.Tensor) -> torch.Tensor:
        """Features of clean (or pre-noised) images at `t_fixed`: [N, feature_dim]."""
        return self(x)

    def __repr__(self) -> str:
        return (
            f"{self.__class__.__name__}(tap={self.tap.key}, t_fixed={self.t_fixed}, "
            f"feature_dim={self.feature_dim})"
        )


def truncate(net: DDAENetwork, tap: TapLike, t_fixed: int) -> Encoder:
    """
    Build an encoder from a copy of `net` cut after `tap`.

    With untouched weights, `truncate(net, tap, t)(x)` equals the pooled
    `forward_with_tap(net, x, t, tap)` activation exactly.

    Raises:
        UnknownTapError: Tap not in the tap index.
        ContractError: Invalid level.
    """
    resolved = net.tap(tap)
    return Encoder(net.truncated(resolved), resolved, t_fixed)
