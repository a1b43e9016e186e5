"""
Master seed fan-out.

One master seed is expanded into named substreams (``init``, ``noising``, ``sampling``,
``splits``, ...) so that each phase of a run is reproducible on its own: re-running only the
grid search with the same master seed reproduces the grid search bitwise, whatever happened in
pre-training.

Classes:
    - SeedBank: Derives substream seeds and ready-made `torch.Generator` objects.

Functions:
    - derive_seed(master, *names) -> int: Deterministic 63-bit seed for a named substream.
"""

import hashlib
from typing import Union

import torch

STREAM_INIT = "init"
STREAM_NOISING = "noising"
STREAM_SAMPLING = "sampling"
STREAM_SPLITS = "splits"
STREAM_PROBE = "probe"
STREAM_METRICS = "metrics"


def derive_seed(master: int, *names: Union[str, int]) -> int:
    """
    Derive the seed of a named substream.

    Args:
        master (int): Master seed.
        *names (Union[str, int]): Substream path, e.g. ``("probe", "up.1.0@16", 11)``.

    Returns:
        int: Seed in [0, 2**63).
    """
    path = "/".join([str(master)] + [str(name) for name in names])
    digest = hashlib.sha256(path.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") & 0x7FFFFFFFFFFFFFFF


class SeedBank:
    """
    Named random substreams of a master seed.

    Attributes:
        master (int): The master seed.

    Example:
        >>> bank = SeedBank(0)
        >>> gen = bank.generator("noising")
        >>> torch.randn(3, generator=gen)
    """

    def __init__(self, master: int) -> None:
        self.master = int(master)

    def seed(self, *names: Union[str, int]) -> int:
        """Seed of the substream identified by `names`."""
        return derive_seed(self.master, *names)

    def generator(self, *names: Union[str, int], device: Union[str, torch.device] = "cpu"):
        """
        Fresh `torch.Generator` positioned at the start of a substream.

        Returns:
            torch.Generator: Seeded generator.
        """
        gen = torch.Generator(device=device)
        gen.manual_seed(self.seed(*names))
        return gen

    def child(self, *names: Union[str, int]) -> "SeedBank":
        """Seed bank whose master is the seed of a substream."""
        return SeedBank(self.seed(*names))

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(master={self.master})"
