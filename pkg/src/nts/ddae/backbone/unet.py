"""
DDAE UNet noise predictor with named activation taps.

The network follows the DDPM UNet: a convolutional stem, `stages` resolution stages of residual
blocks on the way down (each but the last ending with a stride-2 convolution), a middle pair of
blocks (the first with attention), and the mirrored up path whose stages hold one block more than
the down stages and concatenate a skip activation before every block.

Every residual block output is a tap. The tap index lists them in forward order and is a pure
function of the configuration, so it is identical before and after a save / load cycle.

Classes:
    - DDAENetwork: eps_theta(x_t, t) with tap capture and truncation.

Functions:
    - build_ddae(config, seed=0, levels=None) -> DDAENetwork
    - forward_eps(net, x_t, t) -> torch.Tensor
    - forward_with_tap(net, x_t, t, tap) -> tuple[torch.Tensor, torch.Tensor]
"""

import copy
from typing import Iterable, Optional, Sequence, Union

import torch
import torch.nn.functional as F
from torch import nn

from .layers import TimestepEmbedding, DDAEBlock, Downsample, Upsample, group_norm
from .taps import TapId, tap_label
from ..config import DDAEConfig
from ..exceptions import ContractError, UnknownTapError

TapLike = Union[TapId, str]
Levels = Union[int, torch.Tensor]


class _Stage(nn.Module):
    """Blocks of one resolution stage and the optional resampling layer after them."""

    def __init__(self, blocks: Iterable[nn.Module], resample: Optional[nn.Module]) -> None:
        super().__init__()
        self.blocks = nn.ModuleList(blocks)
        self.resample = resample


class DDAENetwork(nn.Module):
    """
    UNet eps-predictor.

    Attributes:
        config (DDAEConfig): Network shape.
        levels (Optional[int]): Number of schedule levels; when set, levels above it are refused.
        tap_index (list[TapId]): Residual block outputs in forward order.
        truncated_at (Optional[str]): Key of the last tap kept by `truncated()`, None for a full
            network.

    Example:
        >>> net = build_ddae(DDAEConfig(base_channels=8, channel_multipliers=[1, 2], image_size=8))
        >>> eps, act = net.forward_with_tap(torch.zeros(2, 3, 8, 8), 1, net.tap_index[-1])
    """

    # pylint: disable=too-many-instance-attributes
    def __init__(self, config: DDAEConfig, levels: Optional[int] = None) -> None:
        super().__init__()
        if not isinstance(config, DDAEConfig):
            raise ContractError(f"Expected a DDAEConfig, got {type(config)}")
        self.config = config
        self.levels = levels
        self.truncated_at: Optional[str] = None
        self.tap_index: list[TapId] = []
        self._unit_of_tap: dict[str, str] = {}
        self._units: list[str] = ["time_embed", "conv_in"]

        base = config.base_channels
        embed_dim = config.time_embed_dim
        groups = config.groups
        dropout = config.dropout
        last = config.stages - 1

        def block(in_ch: int, out_ch: int, resolution: int) -> DDAEBlock:
            attention = resolution in config.attention_resolutions
            return DDAEBlock(in_ch, out_ch, embed_dim, dropout, groups, attention)

        self.time_embed = TimestepEmbedding(base, embed_dim)
        self.conv_in = nn.Conv2d(config.in_channels, base, 3, padding=1)

        channels = base
        skips = [channels]
        down = []
        for i, (out_ch, resolution) in enumerate(zip(config.stage_channels, config.resolutions)):
            blocks = []
            for j in range(config.blocks_per_resolution):
                blocks.append(block(channels, out_ch, resolution))
                channels = out_ch
                skips.append(channels)
                self._register_tap(TapId("down", i, j, resolution), f"down.{i}.blocks.{j}")
            resample = None
            if i != last:
                resample = Downsample(channels)
                skips.append(channels)
                self._units.append(f"down.{i}.resample")
            down.append(_Stage(blocks, resample))
        self.down = nn.ModuleList(down)

        resolution = config.resolutions[-1]
        self.mid = nn.ModuleList(
            [
                DDAEBlock(channels, channels, embed_dim, dropout, groups, attention=True),
                DDAEBlock(channels, channels, embed_dim, dropout, groups, attention=False),
            ]
        )
        for j in range(2):
            self._register_tap(TapId("mid", 0, j, resolution), f"mid.{j}")

        up: list[Optional[_Stage]] = [None] * config.stages
        for i in reversed(range(config.stages)):
            out_ch = config.stage_channels[i]
            resolution = config.resolutions[i]
            blocks = []
            for j in range(config.blocks_per_resolution + 1):
                blocks.append(block(channels + skips.pop(), out_ch, resolution))
                channels = out_ch
                self._register_tap(TapId("up", i, j, resolution), f"up.{i}.blocks.{j}")
            resample = None
            if i != 0:
                resample = Upsample(channels)
                self._units.append(f"up.{i}.resample")
            up[i] = _Stage(blocks, resample)
        self.up = nn.ModuleList(up)

        self.norm_out = group_norm(channels, groups)
        self.conv_out = nn.Conv2d(channels, config.in_channels, 3, padding=1)
        nn.init.xavier_uniform_(self.conv_out.weight, gain=1e-5)
        nn.init.zeros_(self.conv_out.bias)
        self._units += ["norm_out", "conv_out"]

    def _register_tap(self, tap: TapId, unit: str) -> None:
        self.tap_index.append(tap)
        self._unit_of_tap[tap.key] = unit
        self._units.append(unit)

    # Tap lookup

    def tap(self, tap: TapLike) -> TapId:
        """
        Resolve a tap or tap key against the tap index.

        Raises:
            UnknownTapError: Not a tap of this network.
        """
        resolved = TapId.parse(tap) if isinstance(tap, str) else tap
        if not isinstance(resolved, TapId) or resolved.key not in self._unit_of_tap:
            raise UnknownTapError(
                f"Unknown tap {getattr(resolved, 'key', resolved)!r}; "
                f"available: {[t.key for t in self.tap_index]}"
            )
        return resolved

    def taps_on(self, path: str) -> list[TapId]:
        """Taps of one path ("down", "mid" or "up") in forward order."""
        return [tap for tap in self.tap_index if tap.path == path]

    def tap_label(self, tap: TapLike) -> str:
        """Render a tap as "k/K (ordinal block@resolution)"."""
        return tap_label(self.tap(tap), self.tap_index)

    def tap_channels(self, tap: TapLike) -> int:
        """Channel count of a tap activation."""
        resolved = self.tap(tap)
        if resolved.path == "mid":
            return self.config.stage_channels[-1]
        return self.config.stage_channels[resolved.stage]

    # Forward

    def _levels(self, x: torch.Tensor, t: Levels) -> torch.Tensor:
        if x.dim() != 4:
            raise ContractError(f"Expected a batch [N, C, H, W], got shape {tuple(x.shape)}")
        expected = (self.config.in_channels, self.config.image_size, self.config.image_size)
        if tuple(x.shape[1:]) != expected:
            raise ContractError(f"Expected images of shape {expected}, got {tuple(x.shape[1:])}")
        batch = x.shape[0]
        if isinstance(t, torch.Tensor):
            if t.dtype.is_floating_point or t.dtype == torch.bool:
                raise ContractError(f"Levels must be integers, got {t.dtype}")
            levels = t.to(device=x.device, dtype=torch.int64).reshape(-1)
            if levels.numel() == 1:
                levels = levels.expand(batch)
            if levels.numel() != batch:
                raise ContractError(f"Expected {batch} levels, got {levels.numel()}")
        elif isinstance(t, int) and not isinstance(t, bool):
            levels = torch.full((batch,), t, dtype=torch.int64, device=x.device)
        else:
            raise ContractError(f"Levels must be an int or an integer tensor, got {type(t)}")
        if levels.numel():
            low, high = int(levels.min()), int(levels.max())
            upper = self.levels if self.levels is not None else high
            if low < 1 or high > upper:
                raise ContractError(f"Levels {low}..{high} outside [1, {upper}]")
        return levels

    def _run(
        self,
        x: torch.Tensor,
        t: Levels,
        wanted: Iterable[str] = (),
        stop: Optional[str] = None,
    ) -> tuple[Optional[torch.Tensor], dict[str, torch.Tensor]]:
        # pylint: disable=too-many-locals
        wanted = set(wanted)
        captured: dict[str, torch.Tensor] = {}
        if stop is None and self.truncated_at is not None:
            raise ContractError(
                f"Network truncated at {self.truncated_at} cannot produce a noise prediction"
            )

        def visit(key: str, h: torch.Tensor) -> bool:
            if key in wanted:
                captured[key] = h
            return key == stop

        temb = self.time_embed(self._levels(x, t))
        hs = [self.conv_in(x)]
        for i, stage in enumerate(self.down):
            resolution = self.config.resolutions[i]
            for j, block in enumerate(stage.blocks):
                hs.append(block(hs[-1], temb))
                if visit(f"down.{i}.{j}@{resolution}", hs[-1]):
                    return None, captured
            if stage.resample is not None:
                hs.append(stage.resample(hs[-1]))

        h = hs[-1]
        resolution = self.config.resolutions[-1]
        for j, block in enumerate(self.mid):
            h = block(h, temb)
            if visit(f"mid.0.{j}@{resolution}", h):
                return None, captured

        for i in reversed(range(self.config.stages)):
            stage = self.up[i]
            resolution = self.config.resolutions[i]
            for j, block in enumerate(stage.blocks):
                h = block(torch.cat([h, hs.pop()], dim=1), temb)
                if visit(f"up.{i}.{j}@{resolution}", h):
                    return None, captured
            if stage.resample is not None:
                h = stage.resample(h)

        return self.conv_out(F.silu(self.norm_out(h))), captured

    def forward(self, x_t: torch.Tensor, t: Levels) -> torch.Tensor:
        """
        Predict the noise of a corrupted batch.

        Args:
            x_t (torch.Tensor): Noised images [N, C, S, S] with S = config.image_size.
            t (Union[int, torch.Tensor]): 1-based level, shared or one per item.

        Returns:
            torch.Tensor: eps prediction, same shape as x_t.

        Raises:
            ContractError: Wrong input shape or level out of range.
        """
        eps, _ = self._run(x_t, t)
        return eps

    def forward_with_tap(
        self, x_t: torch.Tensor, t: Levels, tap: TapLike
    ) -> tuple[torch.Tensor, torch.Tensor]:
        """
        Noise prediction plus the activation at one tap, from the same pass.

        Raises:
            UnknownTapError: Tap not in the tap index.
        """
        key = self.tap(tap).key
        eps, captured = self._run(x_t, t, wanted=(key,))
        return eps, captured[key]

    def activations(
        self, x_t: torch.Tensor, t: Levels, taps: Sequence[TapLike]
    ) -> dict[str, torch.Tensor]:
        """
        Activations at several taps; the pass stops after the last requested tap.

        Returns:
            dict[str, torch.Tensor]: Tap key -> activation [N, C, r, r].
        """
        keys = [self.tap(tap).key for tap in taps]
        if not keys:
            return {}
        order = {tap.key: n for n, tap in enumerate(self.tap_index)}
        last = max(keys, key=order.__getitem__)
        if self.truncated_at is not None and order[last] > order[self.truncated_at]:
            raise UnknownTapError(f"Tap {last} lies past the truncation point {self.truncated_at}")
        _, captured = self._run(x_t, t, wanted=keys, stop=last)
        return captured

    # Truncation

    def truncated(self, tap: TapLike) -> "DDAENetwork":
        """
        Deep copy keeping only the layers needed up to `tap`.

        Layers past the tap are replaced by `nn.Identity` placeholders, so the copy holds the
        same parameter names (and values) as the original for every kept layer.
        """
        resolved = self.tap(tap)
        clone = copy.deepcopy(self)
        cut = self._units.index(self._unit_of_tap[resolved.key])
        for unit in self._units[cut + 1 :]:
            parent_name, _, child = unit.rpartition(".")
            parent = clone.get_submodule(parent_name) if parent_name else clone
            if getattr(parent, child, None) is not None:
                parent.add_module(child, nn.Identity())
        clone.truncated_at = resolved.key
        return clone

    def metadata(self) -> dict[str, str]:
        """String metadata describing the network (stored in checkpoint containers)."""
        # pylint: disable=import-outside-toplevel
        from ..utilities.digest import canonical_json

        return {
            "network_config": self.config.to_json(),
            "levels": "" if self.levels is None else str(self.levels),
            "tap_index": canonical_json([tap.key for tap in self.tap_index]),
        }

    def __repr__(self) -> str:
        return (
            f"{self.__class__.__name__}(taps={len(self.tap_index)}, "
            f"params={sum(p.numel() for p in self.parameters())}, config={self.config.to_json()})"
        )


def build_ddae(config: DDAEConfig, seed: int = 0, levels: Optional[int] = None) -> DDAENetwork:
    """
    Construct and initialize a network.

    The global torch random state is left untouched; initialization draws from a forked stream
    seeded with `seed`.

    Args:
        config (DDAEConfig): Network shape.
        seed (int): Initialization seed.
        levels (Optional[int]): Number of schedule levels the network will be trained on.

    Returns:
        DDAENetwork: Initialized network.
    """
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        return DDAENetwork(config, levels)


def forward_eps(net: DDAENetwork, x_t: torch.Tensor, t: Levels) -> torch.Tensor:
    """eps_theta(x_t, t)."""
    return net(x_t, t)


def forward_with_tap(
    net: DDAENetwork, x_t: torch.Tensor, t: Levels, tap: TapLike
) -> tuple[torch.Tensor, torch.Tensor]:
    """(eps_theta(x_t, t), activation at `tap`) from one forward pass."""
    return net.forward_with_tap(x_t, t, tap)
