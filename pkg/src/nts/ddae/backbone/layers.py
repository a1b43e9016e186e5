"""
UNet building blocks.

Wide-ResNet style residual blocks with an additive timestep embedding, single-head spatial
self-attention and the resampling convolutions of the DDPM UNet.

Classes:
    - TimestepEmbedding: Sinusoidal features of the level followed by a two-layer MLP.
    - ResBlock: GroupNorm -> SiLU -> conv, + embedding, GroupNorm -> SiLU -> dropout -> conv.
    - AttnBlock: Single-head self-attention over spatial positions, residual.
    - DDAEBlock: A ResBlock optionally followed by an AttnBlock; every DDAEBlock output is a tap.
    - Downsample, Upsample: Stride-2 convolution / nearest upsampling + convolution.

Functions:
    - sinusoidal_embedding(t, dim) -> torch.Tensor
    - group_norm(channels, groups) -> nn.GroupNorm
"""

import math
from typing import Optional

import torch
import torch.nn.functional as F
from torch import nn
from torch.nn import init


def sinusoidal_embedding(t: torch.Tensor, dim: int, dtype: torch.dtype = torch.float32):
    """
    Sinusoidal features of integer levels.

    Args:
        t (torch.Tensor): Levels [N].
        dim (int): Output width; an odd width is zero padded.
        dtype (torch.dtype): Output dtype.

    Returns:
        torch.Tensor: [N, dim] features, sines first then cosines.
    """
    half = dim // 2
    scale = math.log(10000) / max(half - 1, 1)
    freqs = torch.exp(-scale * torch.arange(half, device=t.device, dtype=dtype))
    args = t.to(dtype)[:, None] * freqs[None, :]
    emb = torch.cat([torch.sin(args), torch.cos(args)], dim=1)
    if dim % 2:
        emb = F.pad(emb, (0, 1))
    return emb


def group_norm(channels: int, groups: int) -> nn.GroupNorm:
    """GroupNorm with the largest group count dividing `channels` not above `groups`."""
    return nn.GroupNorm(math.gcd(groups, channels), channels)


def _xavier(module: nn.Module, gain: float = 1.0) -> None:
    init.xavier_uniform_(module.weight, gain=gain)
    init.zeros_(module.bias)


class TimestepEmbedding(nn.Module):
    """Level -> sinusoid(base) -> Linear -> SiLU -> Linear."""

    def __init__(self, sinusoid_dim: int, embed_dim: int) -> None:
        super().__init__()
        self.sinusoid_dim = sinusoid_dim
        self.dense0 = nn.Linear(sinusoid_dim, embed_dim)
        self.dense1 = nn.Linear(embed_dim, embed_dim)
        _xavier(self.dense0)
        _xavier(self.dense1)

    def forward(self, t: torch.Tensor) -> torch.Tensor:
        emb = sinusoidal_embedding(t, self.sinusoid_dim, self.dense0.weight.dtype)
        return self.dense1(F.silu(self.dense0(emb)))


class ResBlock(nn.Module):
    """Residual block with additive timestep embedding."""

    # pylint: disable=too-many-arguments, too-many-positional-arguments
    def __init__(
        self, in_ch: int, out_ch: int, embed_dim: int, dropout: float, groups: int
    ) -> None:
        super().__init__()
        self.norm1 = group_norm(in_ch, groups)
        self.conv1 = nn.Conv2d(in_ch, out_ch, 3, padding=1)
        self.temb_proj = nn.Linear(embed_dim, out_ch)
        self.norm2 = group_norm(out_ch, groups)
        self.dropout = nn.Dropout(dropout)
        self.conv2 = nn.Conv2d(out_ch, out_ch, 3, padding=1)
        self.shortcut: nn.Module = (
            nn.Conv2d(in_ch, out_ch, 1) if in_ch != out_ch else nn.Identity()
        )
        _xavier(self.conv1)
        _xavier(self.temb_proj)
        _xavier(self.conv2, gain=1e-5)
        if isinstance(self.shortcut, nn.Conv2d):
            _xavier(self.shortcut)

    def forward(self, x: torch.Tensor, temb: torch.Tensor) -> torch.Tensor:
        h = self.conv1(F.silu(self.norm1(x)))
        h = h + self.temb_proj(F.silu(temb))[:, :, None, None]
        h = self.conv2(self.dropout(F.silu(self.norm2(h))))
        return self.shortcut(x) + h


class AttnBlock(nn.Module):
    """Single-head self-attention over the H x W positions."""

    def __init__(self, channels: int, groups: int) -> None:
        super().__init__()
        self.norm = group_norm(channels, groups)
        self.q = nn.Conv2d(channels, channels, 1)
        self.k = nn.Conv2d(channels, channels, 1)
        self.v = nn.Conv2d(channels, channels, 1)
        self.proj = nn.Conv2d(channels, channels, 1)
        for module in (self.q, self.k, self.v):
            _xavier(module)
        _xavier(self.proj, gain=1e-5)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        batch, channels, height, width = x.shape
        h = self.norm(x)
        q = self.q(h).reshape(batch, channels, height * width).permute(0, 2, 1)
        k = self.k(h).reshape(batch, channels, height * width)
        v = self.v(h).reshape(batch, channels, height * width).permute(0, 2, 1)
        weights = torch.softmax(torch.bmm(q, k) * channels**-0.5, dim=-1)
        h = torch.bmm(weights, v).permute(0, 2, 1).reshape(batch, channels, height, width)
        return x + self.proj(h)


class DDAEBlock(nn.Module):
    """ResBlock followed by optional attention: the unit a tap observes."""

    # pylint: disable=too-many-arguments, too-many-positional-arguments
    def __init__(
        self,
        in_ch: int,
        out_ch: int,
        embed_dim: int,
        dropout: float,
        groups: int,
        attention: bool = False,
    ) -> None:
        super().__init__()
        self.res = ResBlock(in_ch, out_ch, embed_dim, dropout, groups)
        self.attn: Optional[AttnBlock] = AttnBlock(out_ch, groups) if attention else None
        self.out_channels = out_ch

    def forward(self, x: torch.Tensor, temb: torch.Tensor) -> torch.Tensor:
        h = self.res(x, temb)
        if self.attn is not None:
            h = self.attn(h)
        return h


class Downsample(nn.Module):
    """Stride-2 3x3 convolution."""

    def __init__(self, channels: int) -> None:
        super().__init__()
        self.conv = nn.Conv2d(channels, channels, 3, stride=2, padding=1)
        _xavier(self.conv)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.conv(x)


class Upsample(nn.Module):
    """Nearest-neighbour x2 upsampling followed by a 3x3 convolution."""

    def __init__(self, channels: int) -> None:
        super().__init__()
        self.conv = nn.Conv2d(channels, channels, 3, padding=1)
        _xavier(self.conv)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.conv(F.interpolate(x, scale_factor=2, mode="nearest"))
