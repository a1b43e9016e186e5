"""
Alignment and uniformity of noised-image features on the unit hypersphere.

Features are L2-normalized before any distance is taken, so both metrics are invariant to a
positive rescaling of the encoder output.

    alignment  = E ||f(x^eps1) - f(x^eps2)||^2             (two noisings of one image)
    uniformity = log E exp(-2 ||f(x^eps) - f(y^eps)||^2)   (ordered image pairs, with replacement)

Functions:
    - normalize_features(features) -> torch.Tensor
    - alignment_from_features(a, b) -> float
    - uniformity_from_features(a, b) -> float
    - alignment(encoder_fn, dataset, t, sched, generator, n_pairs) -> float
    - uniformity(encoder_fn, dataset, t, sched, generator, n_pairs, shared_noise=True) -> float
    - monitor_checkpoints(checkpoints, tap, t, dataset, sched, opts, ...) -> list[dict]
"""

import math
from logging import Logger, getLogger
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import torch

from ..backbone import TapId, load_container, load_network, truncate
from ..config import MetricOpts
from ..corruption import ImageBatch, NoiseSchedule, as_tensor, noise
from ..exceptions import ContractError, NumericalError
from ..utilities.records import RecordSink
from ..utilities.seeding import STREAM_METRICS, SeedBank

EncoderFn = Callable[[torch.Tensor, int], torch.Tensor]

DEFAULT_METRIC_BATCH: int = 256


def normalize_features(features: torch.Tensor) -> torch.Tensor:
    """
    Project rows onto the unit sphere (float64).

    Raises:
        NumericalError: A row has zero norm.
    """
    values = features.detach().double()
    norms = values.norm(dim=1, keepdim=True)
    if bool((norms == 0).any()):
        raise NumericalError(
            "Cannot normalize a zero-norm feature",
            {"zero_rows": int((norms == 0).sum())},
        )
    return values / norms


def _squared_distances(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    if a.shape != b.shape or a.dim() != 2 or a.shape[0] == 0:
        raise ContractError(f"Expected two nonempty [N, D] feature sets, got {a.shape}, {b.shape}")
    return (normalize_features(a) - normalize_features(b)).pow(2).sum(dim=1)


def alignment_from_features(a: torch.Tensor, b: torch.Tensor) -> float:
    """Mean squared distance between paired normalized rows, in [0, 4]."""
    return float(_squared_distances(a, b).mean())


def uniformity_from_features(a: torch.Tensor, b: torch.Tensor) -> float:
    """Log of the mean Gaussian similarity of paired normalized rows, in [-8, 0]."""
    distances = _squared_distances(a, b)
    return float(torch.logsumexp(-2.0 * distances, dim=0) - math.log(distances.numel()))


@torch.no_grad()
def _encode(encoder_fn: EncoderFn, x: torch.Tensor, t: int, batch_size: int) -> torch.Tensor:
    chunks = [
        encoder_fn(x[start : start + batch_size], t).detach().cpu()
        for start in range(0, x.shape[0], batch_size)
    ]
    return torch.cat(chunks)


def _device_of(encoder_fn: EncoderFn) -> torch.device:
    parameters = getattr(encoder_fn, "parameters", None)
    if callable(parameters):
        first = next(parameters(), None)
        if first is not None:
            return first.device
    return torch.device("cpu")


# pylint: disable=too-many-arguments, too-many-positional-arguments
def alignment(
    encoder_fn: EncoderFn,
    dataset: Union[ImageBatch, torch.Tensor],
    t: int,
    sched: NoiseSchedule,
    generator: torch.Generator,
    n_pairs: int,
    batch_size: int = DEFAULT_METRIC_BATCH,
) -> float:
    """
    Alignment of two independent noisings of the same images.

    Args:
        encoder_fn (EncoderFn): f(x_t, t) -> features [N, D].
        dataset (Union[ImageBatch, torch.Tensor]): Clean images.
        t (int): Level of both noisings.
        sched (NoiseSchedule): Corruption schedule.
        generator (torch.Generator): Stream for image indices and noise.
        n_pairs (int): Number of positive pairs.
        batch_size (int): Encoder batch size.
    """
    if n_pairs < 1:
        raise ContractError(f"n_pairs must be >= 1, got {n_pairs}")
    x0 = as_tensor(dataset)
    t = sched.check_level(t)
    index = torch.randint(0, x0.shape[0], (n_pairs,), generator=generator)
    images = x0[index]
    eps1 = torch.randn(images.shape, generator=generator, dtype=images.dtype)
    eps2 = torch.randn(images.shape, generator=generator, dtype=images.dtype)
    device = _device_of(encoder_fn)
    first = _encode(encoder_fn, noise(images, t, eps1, sched).to(device), t, batch_size)
    second = _encode(encoder_fn, noise(images, t, eps2, sched).to(device), t, batch_size)
    return alignment_from_features(first, second)


# pylint: disable=too-many-arguments, too-many-positional-arguments
def uniformity(
    encoder_fn: EncoderFn,
    dataset: Union[ImageBatch, torch.Tensor],
    t: int,
    sched: NoiseSchedule,
    generator: torch.Generator,
    n_pairs: int,
    shared_noise: bool = True,
    batch_size: int = DEFAULT_METRIC_BATCH,
) -> float:
    """
    Uniformity over i.i.d. ordered image pairs (self pairs included).

    Args:
        shared_noise (bool): Noise both images of a pair with the same draw; False draws
            independent noise per image.
    """
    if n_pairs < 1:
        raise ContractError(f"n_pairs must be >= 1, got {n_pairs}")
    x0 = as_tensor(dataset)
    t = sched.check_level(t)
    first_index = torch.randint(0, x0.shape[0], (n_pairs,), generator=generator)
    second_index = torch.randint(0, x0.shape[0], (n_pairs,), generator=generator)
    x, y = x0[first_index], x0[second_index]
    eps_x = torch.randn(x.shape, generator=generator, dtype=x.dtype)
    eps_y = eps_x if shared_noise else torch.randn(y.shape, generator=generator, dtype=y.dtype)
    device = _device_of(encoder_fn)
    first = _encode(encoder_fn, noise(x, t, eps_x, sched).to(device), t, batch_size)
    second = _encode(encoder_fn, noise(y, t, eps_y, sched).to(device), t, batch_size)
    return uniformity_from_features(first, second)


# pylint: disable=too-many-arguments, too-many-positional-arguments, too-many-locals
def monitor_checkpoints(
    checkpoints: Sequence[Union[str, Path]],
    tap: Union[TapId, str],
    t: int,
    dataset: ImageBatch,
    sched: NoiseSchedule,
    opts: MetricOpts,
    seed: int = 0,
    sink: Optional[RecordSink] = None,
    logger: Optional[Logger] = None,
) -> list[dict]:
    """
    Alignment and uniformity at (tap, t) for a series of pre-training checkpoints.

    Every checkpoint is evaluated on the same image pairs and noise draws.

    Returns:
        list[dict]: One ``{"epoch", "path", "alignment", "uniformity"}`` entry per checkpoint.
    """
    logger = logger if isinstance(logger, Logger) else getLogger(__name__)
    seeds = SeedBank(seed).child(STREAM_METRICS)
    rows = []
    for number, path in enumerate(checkpoints, start=1):
        _, metadata = load_container(path)
        epoch = int(metadata.get("epoch", number))
        encoder = truncate(load_network(path), tap, t).eval()
        align = alignment(encoder, dataset, t, sched, seeds.generator("align"), opts.n_pairs)
        uniform = uniformity(
            encoder, dataset, t, sched, seeds.generator("uniform"), opts.n_pairs,
            opts.shared_noise,
        )
        rows.append({"epoch": epoch, "path": str(path), "alignment": align, "uniformity": uniform})
        logger.info(
            "Checkpoint epoch %d: alignment %.5f uniformity %.5f", epoch, align, uniform
        )
        if sink is not None:
            sink.emit("metric", f"alignment/{encoder.tap.key}/t={t}", epoch, align)
            sink.emit("metric", f"uniformity/{encoder.tap.key}/t={t}", epoch, uniform)
    return rows
