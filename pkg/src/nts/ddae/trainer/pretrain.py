"""
Diffusion pre-training.

Each step draws one level per image uniformly from [1, T] and one Gaussian noise tensor, corrupts
the (augmented) batch and regresses the noise. Randomness comes from three substreams of
`TrainOpts.seed`: ``batches`` (shuffling and augmentation), ``noising`` (levels and noise) and
``dropout`` (the global torch generator). Checkpoints store the weights in a container and the
optimizer / scheduler / generator states in a ``.state.pt`` sidecar, so a resumed run continues
bitwise where the interrupted one stopped.

Classes:
    - EMA: Exponential moving average of network weights.

Functions:
    - sample_levels(batch, levels, generator) -> torch.Tensor
    - pretrain_step(net, batch, sched, generator, optimizer, ...) -> float
    - pretrain(net, dataset, sched, opts, ...) -> tuple[DDAENetwork, list[ExperimentRecord]]
    - checkpoint_paths(out_dir, epoch) -> tuple[Path, Path]
"""

import copy
import math
from logging import Logger, getLogger
from pathlib import Path
from typing import Optional, Union

import torch
from torch import nn
from tqdm import tqdm

from .optim import make_lr_scheduler, make_optimizer
from .producer import BatchProducer
from ..backbone import DDAENetwork, load_network, save_network
from ..config import TrainOpts
from ..corruption import ImageBatch, NoiseSchedule, as_tensor, eps_loss, noise
from ..exceptions import ContractError, DataFormatError, NumericalError
from ..utilities.records import ExperimentRecord, RecordSink
from ..utilities.seeding import STREAM_NOISING, SeedBank

PathLike = Union[str, Path]


class EMA:
    """
    Shadow copy of a network updated as shadow = decay * shadow + (1 - decay) * weights.

    Attributes:
        decay (float): Decay in [0, 1].
        shadow (nn.Module): The averaged network.
    """

    def __init__(self, net: nn.Module, decay: float) -> None:
        self.decay = decay
        self.shadow = copy.deepcopy(net).eval()
        for param in self.shadow.parameters():
            param.requires_grad_(False)

    @torch.no_grad()
    def update(self, net: nn.Module) -> None:
        """Fold the current weights of `net` into the shadow."""
        for shadow, param in zip(self.shadow.parameters(), net.parameters()):
            shadow.mul_(self.decay).add_(param.detach(), alpha=1.0 - self.decay)

    def state_dict(self) -> dict:
        return self.shadow.state_dict()

    def load_state_dict(self, state: dict) -> None:
        self.shadow.load_state_dict(state)


def sample_levels(batch: int, levels: int, generator: torch.Generator) -> torch.Tensor:
    """One level per item, uniform over [1, levels], int64 [batch]."""
    return torch.randint(1, levels + 1, (batch,), generator=generator, dtype=torch.int64)


def _level_histogram(t: torch.Tensor, levels: int) -> list[int]:
    bins = min(levels, 10)
    return torch.histc(t.double(), bins=bins, min=1, max=levels).long().tolist()


# pylint: disable=too-many-arguments, too-many-positional-arguments
def pretrain_step(
    net: DDAENetwork,
    batch: Union[ImageBatch, torch.Tensor],
    sched: NoiseSchedule,
    generator: torch.Generator,
    optimizer: torch.optim.Optimizer,
    grad_clip: Optional[float] = None,
    step: int = 0,
) -> float:
    """
    One optimizer update on the noise regression loss.

    Args:
        net (DDAENetwork): Network in training mode.
        batch (Union[ImageBatch, torch.Tensor]): Clean images [B, C, S, S] at the network size.
        sched (NoiseSchedule): Corruption schedule; its level count must fit the network.
        generator (torch.Generator): CPU stream for levels and noise.
        optimizer (torch.optim.Optimizer): Optimizer over `net` parameters.
        grad_clip (Optional[float]): Gradient norm threshold, None disables clipping.
        step (int): Global step number, reported in diagnostics.

    Returns:
        float: Loss before the update.

    Raises:
        ContractError: Image size or level count mismatch.
        NumericalError: Non-finite loss or gradient norm; `diagnostics` holds the step, a level
            histogram and the gradient norm.
    """
    x0 = as_tensor(batch)
    size = net.config.image_size
    if tuple(x0.shape[1:]) != (net.config.in_channels, size, size):
        raise ContractError(
            f"Batch of shape {tuple(x0.shape[1:])} does not fit a {size}x{size} network"
        )
    if net.levels is not None and net.levels != sched.levels:
        raise ContractError(f"Network expects {net.levels} levels, schedule has {sched.levels}")
    device = next(net.parameters()).device
    t = sample_levels(x0.shape[0], sched.levels, generator)
    eps = torch.randn(x0.shape, generator=generator, dtype=x0.dtype)
    x0, t, eps = x0.to(device), t.to(device), eps.to(device)
    x_t = noise(x0, t, eps, sched)

    optimizer.zero_grad(set_to_none=True)
    loss = eps_loss(net(x_t, t), eps)
    if not bool(torch.isfinite(loss)):
        raise NumericalError(
            f"Non-finite training loss at step {step}",
            {"step": step, "t_histogram": _level_histogram(t, sched.levels), "grad_norm": None},
        )
    loss.backward()
    max_norm = grad_clip if grad_clip is not None else math.inf
    grad_norm = float(nn.utils.clip_grad_norm_(net.parameters(), max_norm))
    if not math.isfinite(grad_norm):
        raise NumericalError(
            f"Non-finite gradient norm at step {step}",
            {
                "step": step,
                "t_histogram": _level_histogram(t, sched.levels),
                "grad_norm": grad_norm,
                "loss": float(loss),
            },
        )
    optimizer.step()
    return float(loss.detach())


def checkpoint_paths(out_dir: PathLike, epoch: int) -> tuple[Path, Path]:
    """Container and resume-state sidecar of the checkpoint taken after `epoch`."""
    base = Path(out_dir) / "checkpoints" / f"epoch_{epoch:04d}"
    return base.with_suffix(".ddae"), base.with_suffix(".state.pt")


def _save_checkpoint(
    net: DDAENetwork,
    out_dir: PathLike,
    epoch: int,
    state: dict,
    ema: Optional[EMA],
    logger: Logger,
) -> Path:
    weights, sidecar = checkpoint_paths(out_dir, epoch)
    try:
        save_network(net, weights, {"epoch": str(epoch)}, logger)
        if ema is not None:
            save_network(
                ema.shadow, weights.with_suffix(".ema.ddae"), {"epoch": str(epoch)}, logger
            )
        torch.save(state, sidecar)
    except OSError as exc:
        raise OSError(f"Cannot write checkpoint {weights}: {exc}") from exc
    logger.info("Checkpoint after epoch %d written to %s", epoch, weights)
    return weights


def _load_resume(path: PathLike) -> tuple[DDAENetwork, dict]:
    weights = Path(path)
    sidecar = weights.with_suffix(".state.pt")
    if not sidecar.exists():
        raise DataFormatError("Checkpoint has no resume state", str(sidecar), 0)
    return load_network(weights), torch.load(sidecar, weights_only=True)


# pylint: disable=too-many-locals, too-many-branches, too-many-statements
def pretrain(
    net: DDAENetwork,
    dataset: ImageBatch,
    sched: NoiseSchedule,
    opts: TrainOpts,
    sink: Optional[RecordSink] = None,
    out_dir: Optional[PathLike] = None,
    resume_from: Optional[PathLike] = None,
    progress: bool = False,
    logger: Optional[Logger] = None,
) -> tuple[DDAENetwork, list[ExperimentRecord]]:
    """
    Train `net` in place to predict the corrupting noise.

    Args:
        net (DDAENetwork): Network to train.
        dataset (ImageBatch): Training images.
        sched (NoiseSchedule): Corruption schedule.
        opts (TrainOpts): Training options.
        sink (Optional[RecordSink]): Receives one ``pretrain/loss`` record per epoch; an
            in-memory sink is used when None.
        out_dir (Optional[PathLike]): Run directory for checkpoints, none are written when None.
        resume_from (Optional[PathLike]): Container written by an earlier call with the same
            options; training continues after its epoch.
        progress (bool): Show a tqdm bar per epoch.
        logger (Optional[Logger]): Logger, module logger when None.

    Returns:
        tuple[DDAENetwork, list[ExperimentRecord]]: The trained network (EMA weights when
        `opts.ema_decay` is set) and the records emitted by this call.

    Raises:
        ContractError: Empty dataset or mismatching shapes.
        NumericalError: Non-finite loss or gradients.
        OSError: Checkpoint I/O failure, with the path.
    """
    logger = logger if isinstance(logger, Logger) else getLogger(__name__)
    if opts.epochs == 0:
        logger.info("Zero epochs requested, network left untouched")
        return net, []
    if len(dataset) == 0:
        raise ContractError("Cannot pre-train on an empty dataset")
    sink = sink if sink is not None else RecordSink(logger=logger)
    emitted: list[ExperimentRecord] = []

    seeds = SeedBank(opts.seed)
    noise_gen = seeds.generator(STREAM_NOISING)
    batch_gen = seeds.generator("batches")
    torch.manual_seed(seeds.seed("dropout"))
    optimizer = make_optimizer(net.parameters(), opts.learning_rate)
    steps_per_epoch = -(-len(dataset) // opts.batch_size)
    scheduler = make_lr_scheduler(optimizer, opts.lr_schedule, steps_per_epoch * opts.epochs)
    ema = EMA(net, opts.ema_decay) if opts.ema_decay is not None else None
    start_epoch, step = 0, 0

    if resume_from is not None:
        restored, state = _load_resume(resume_from)
        net.load_state_dict(restored.state_dict())
        optimizer.load_state_dict(state["optimizer"])
        scheduler.load_state_dict(state["scheduler"])
        noise_gen.set_state(state["noise_generator"])
        batch_gen.set_state(state["batch_generator"])
        torch.set_rng_state(state["torch_rng"])
        if ema is not None and state.get("ema") is not None:
            ema.load_state_dict(state["ema"])
        start_epoch, step = int(state["epoch"]), int(state["step"])
        logger.info("Resuming pre-training after epoch %d from %s", start_epoch, resume_from)

    for epoch in range(start_epoch, opts.epochs):
        net.train()
        total, count = 0.0, 0
        with BatchProducer(
            dataset, opts.batch_size, opts.augmentations, batch_gen, opts.workers, logger
        ) as producer:
            bar = tqdm(
                producer,
                total=steps_per_epoch,
                desc=f"epoch {epoch + 1}/{opts.epochs}",
                disable=not progress,
                leave=False,
            )
            for images, _ in bar:
                loss = pretrain_step(
                    net, images, sched, noise_gen, optimizer, opts.grad_clip, step
                )
                scheduler.step()
                if ema is not None:
                    ema.update(net)
                total += loss * images.shape[0]
                count += images.shape[0]
                step += 1
                logger.debug("Step %d loss %.6f", step, loss)
                bar.set_postfix(loss=f"{loss:.4f}")
        mean_loss = total / count
        emitted.append(sink.emit("pretrain", "loss", epoch + 1, mean_loss))
        logger.info("Epoch %d/%d mean loss %.6f", epoch + 1, opts.epochs, mean_loss)

        last = epoch + 1 == opts.epochs
        if out_dir is not None and ((epoch + 1) % opts.checkpoint_every == 0 or last):
            state = {
                "epoch": epoch + 1,
                "step": step,
                "optimizer": optimizer.state_dict(),
                "scheduler": scheduler.state_dict(),
                "noise_generator": noise_gen.get_state(),
                "batch_generator": batch_gen.get_state(),
                "torch_rng": torch.get_rng_state(),
                "ema": ema.state_dict() if ema is not None else None,
            }
            _save_checkpoint(net, out_dir, epoch + 1, state, ema, logger)

    if ema is not None:
        net.load_state_dict(ema.state_dict())
        logger.info("Returning EMA weights (decay %g)", ema.decay)
    net.eval()
    return net, emitted
