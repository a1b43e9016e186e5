"""
UNet backbone.

Classes:
    - TapId: Residual block output identifier.
    - DDAENetwork: eps-predicting UNet with an enumerable tap index.
    - Encoder: Network truncated at a tap with a fixed level, globally average pooled.

Functions:
    - build_ddae, forward_eps, forward_with_tap, truncate, tap_label
    - save_container, load_container, save_network, load_network: Checkpoint container I/O.
"""

from .taps import TapId, tap_label, ordinal
from .unet import DDAENetwork, build_ddae, forward_eps, forward_with_tap
from .encoder import Encoder, truncate, global_average_pool
from .container import save_container, load_container, save_network, load_network

__all__ = [
    "TapId",
    "tap_label",
    "ordinal",
    "DDAENetwork",
    "build_ddae",
    "forward_eps",
    "forward_with_tap",
    "Encoder",
    "truncate",
    "global_average_pool",
    "save_container",
    "load_container",
    "save_network",
    "load_network",
]
