"""
Reference probes a pre-trained representation has to beat.

Functions:
    - pixel_probe(dataset, opts, test=None) -> float: Linear probe on raw pixels.
    - random_init_probe(config, tap, t, dataset, sched, opts, test=None) -> float: Linear probe
      on an untrained network of the same architecture.
"""

from logging import Logger, getLogger
from typing import Optional, Union

from .features import extract_pixel_features
from .grid import probe_cell, split_images
from .linear import train_linear_probe
from ..backbone import TapId, build_ddae
from ..config import DDAEConfig, ProbeOpts
from ..corruption import ImageBatch, NoiseSchedule


def pixel_probe(
    dataset: ImageBatch,
    opts: ProbeOpts,
    test: Optional[ImageBatch] = None,
    logger: Optional[Logger] = None,
) -> float:
    """Held-out accuracy of a linear probe on flattened pixels."""
    train, held = split_images(dataset, test, opts)
    _, accuracy = train_linear_probe(
        extract_pixel_features(train), opts, extract_pixel_features(held), logger
    )
    return accuracy


# pylint: disable=too-many-arguments, too-many-positional-arguments
def random_init_probe(
    config: DDAEConfig,
    tap: Union[TapId, str],
    t: int,
    dataset: ImageBatch,
    sched: NoiseSchedule,
    opts: ProbeOpts,
    test: Optional[ImageBatch] = None,
    seed: int = 0,
    logger: Optional[Logger] = None,
) -> float:
    """Held-out accuracy of the (tap, t) probe on a freshly initialized network."""
    logger = logger if isinstance(logger, Logger) else getLogger(__name__)
    net = build_ddae(config, seed, sched.levels).eval()
    train, held = split_images(dataset, test, opts)
    cell = probe_cell(net, tap, t, train, held, sched, opts, logger)
    logger.info("Random-init probe at %s t=%d: accuracy %.4f", cell.tap.key, t, cell.accuracy)
    return cell.accuracy
