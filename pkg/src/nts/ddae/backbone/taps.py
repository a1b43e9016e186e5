"""
Activation tap identifiers.

A tap names the output of one residual block of the UNet. Taps are enumerated in forward-pass
order: down path, middle, up path. Up-path blocks come after their skip concatenation.

Classes:
    - TapId: (path, stage, block, resolution), with a stable text key such as "up.1.0@16".

Functions:
    - ordinal(n) -> str: "1st", "2nd", "3rd", "4th", ...
    - tap_label(tap, tap_index) -> str: "k/K (ordinal block@resolution)".
"""

import re
from dataclasses import dataclass
from typing import Sequence

from ..exceptions import ContractError, UnknownTapError

TAP_PATHS: tuple[str, str, str] = ("down", "mid", "up")

_KEY_PATTERN = re.compile(r"^(down|mid|up)\.(\d+)\.(\d+)@(\d+)$")


@dataclass(frozen=True)
class TapId:
    """
    Identifier of a residual block output.

    Attributes:
        path (str): "down", "mid" or "up".
        stage (int): Resolution stage index (0 = full resolution; 0 for the middle blocks).
        block (int): Block index within the stage.
        resolution (int): Spatial side length of the activation.
    """

    path: str
    stage: int
    block: int
    resolution: int

    def __post_init__(self) -> None:
        if self.path not in TAP_PATHS:
            raise ContractError(f"Tap path must be one of {TAP_PATHS}, got {self.path!r}")
        if min(self.stage, self.block) < 0 or self.resolution < 1:
            raise ContractError(f"Invalid tap coordinates {self!r}")

    @property
    def key(self) -> str:
        """Stable text key, e.g. "up.1.0@16"."""
        return f"{self.path}.{self.stage}.{self.block}@{self.resolution}"

    @classmethod
    def parse(cls, key: str) -> "TapId":
        """
        Parse a key produced by `TapId.key`.

        Raises:
            UnknownTapError: Malformed key.
        """
        match = _KEY_PATTERN.match(key.strip()) if isinstance(key, str) else None
        if match is None:
            raise UnknownTapError(f"Malformed tap key {key!r}, expected e.g. 'up.1.0@16'")
        path, stage, block, resolution = match.groups()
        return cls(path, int(stage), int(block), int(resolution))

    def __str__(self) -> str:
        return self.key


def ordinal(n: int) -> str:
    """English ordinal of a positive integer."""
    if 10 <= n % 100 <= 20:
        suffix = "th"
    else:
        suffix = {1: "st", 2: "nd", 3: "rd"}.get(n % 10, "th")
    return f"{n}{suffix}"


def tap_label(tap: TapId, tap_index: Sequence[TapId]) -> str:
    """
    Human readable position of a tap.

    k is the 1-based position of the tap among the taps of its path and K the number of taps on
    that path; the block ordinal counts within the stage.

    Example:
        With 128 channels, multipliers 1-2-2-2 and 2 blocks, "up.1.0@16" renders
        "7/12 (1st block@16)".

    Raises:
        UnknownTapError: Tap not in `tap_index`.
    """
    if tap not in tap_index:
        raise UnknownTapError(f"Tap {tap.key} is not part of this network")
    same_path = [item for item in tap_index if item.path == tap.path]
    position = same_path.index(tap) + 1
    return f"{position}/{len(same_path)} ({ordinal(tap.block + 1)} block@{tap.resolution})"
