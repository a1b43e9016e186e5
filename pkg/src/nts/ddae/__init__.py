"""Denoising diffusion autoencoders: pre-training, probing and representation metrics."""

from .version import __version__
from .config import RunConfig, resolve_run_config
from .exceptions import (
    DDAEError,
    DDAEConfigError,
    ContractError,
    UnknownTapError,
    DataFormatError,
    NumericalError,
)
