"""
Linear probing on frozen features.

The probe is a single `nn.Linear` layer trained with cross entropy; no normalization layer sits
between the features and the head. Head initialization and batch order come from explicit
generators, so a probe is reproducible to the last digit and safe to train from several threads.

Functions:
    - init_linear_head(in_dim, num_classes, generator) -> nn.Linear
    - fit_linear_head(head, epoch_data, opts, generator) -> list[float]
    - head_accuracy(head, features, labels) -> float
    - split_table(table, fraction, generator) -> tuple[FeatureTable, FeatureTable]
    - train_linear_probe(table, opts, test=None) -> tuple[nn.Linear, float]
"""

import math
from logging import Logger, getLogger
from typing import Callable, Optional

import torch
import torch.nn.functional as F
from torch import nn

from .features import FeatureTable
from ..config import ProbeOpts
from ..exceptions import ContractError
from ..trainer import make_lr_scheduler, make_optimizer
from ..utilities.seeding import STREAM_PROBE, STREAM_SPLITS, SeedBank

EpochData = Callable[[int], tuple[torch.Tensor, torch.Tensor]]


def init_linear_head(in_dim: int, num_classes: int, generator: torch.Generator) -> nn.Linear:
    """`nn.Linear` with the default uniform(-1/sqrt(in), 1/sqrt(in)) init drawn from `generator`."""
    head = nn.Linear(in_dim, num_classes)
    bound = 1.0 / math.sqrt(in_dim)
    with torch.no_grad():
        head.weight.copy_(torch.rand(head.weight.shape, generator=generator) * 2 * bound - bound)
        head.bias.copy_(torch.rand(head.bias.shape, generator=generator) * 2 * bound - bound)
    return head


def fit_linear_head(
    head: nn.Linear,
    epoch_data: EpochData,
    opts: ProbeOpts,
    generator: torch.Generator,
    logger: Optional[Logger] = None,
) -> list[float]:
    """
    Train a head with Adam and the configured per-step schedule.

    Args:
        head (nn.Linear): Head trained in place.
        epoch_data (EpochData): Returns (features [N, D], labels [N]) for an epoch index; the row
            count must not change between epochs.
        opts (ProbeOpts): Epochs, batch size, learning rate, schedule, warm-up, weight decay.
        generator (torch.Generator): Batch order stream.
        logger (Optional[Logger]): Logger, module logger when None.

    Returns:
        list[float]: Mean training loss per epoch.
    """
    logger = logger if isinstance(logger, Logger) else getLogger(__name__)
    if opts.epochs == 0:
        return []
    features, labels = epoch_data(0)
    count = features.shape[0]
    steps = -(-count // opts.batch_size)
    optimizer = make_optimizer(head.parameters(), opts.learning_rate, opts.weight_decay)
    scheduler = make_lr_scheduler(
        optimizer, opts.lr_schedule, steps * opts.epochs, steps * opts.warmup_epochs
    )
    device = head.weight.device
    losses = []
    head.train()
    for epoch in range(opts.epochs):
        if epoch > 0:
            features, labels = epoch_data(epoch)
        order = torch.randperm(count, generator=generator)
        total = 0.0
        for start in range(0, count, opts.batch_size):
            index = order[start : start + opts.batch_size]
            x, y = features[index].to(device), labels[index].to(device)
            loss = F.cross_entropy(head(x), y)
            optimizer.zero_grad(set_to_none=True)
            loss.backward()
            optimizer.step()
            scheduler.step()
            total += float(loss.detach()) * index.numel()
        losses.append(total / count)
        logger.debug("Probe epoch %d/%d loss %.5f", epoch + 1, opts.epochs, losses[-1])
    head.eval()
    return losses


@torch.no_grad()
def head_accuracy(head: nn.Module, features: torch.Tensor, labels: torch.Tensor) -> float:
    """Share of rows whose argmax prediction equals the label."""
    if features.shape[0] == 0:
        raise ContractError("Cannot evaluate accuracy on an empty split")
    device = next(head.parameters()).device
    predictions = head(features.to(device)).argmax(dim=1).cpu()
    return float((predictions == labels).double().mean())


def split_table(
    table: FeatureTable, fraction: float, generator: torch.Generator
) -> tuple[FeatureTable, FeatureTable]:
    """Seeded (train, held-out) split; the held-out part holds round(N * fraction) rows, min 1."""
    count = len(table)
    permutation = torch.randperm(count, generator=generator)
    held = min(max(int(round(count * fraction)), 1 if count > 1 else 0), max(count - 1, 0))
    return table.subset(permutation[held:]), table.subset(permutation[:held])


def train_linear_probe(
    table: FeatureTable,
    opts: ProbeOpts,
    test: Optional[FeatureTable] = None,
    logger: Optional[Logger] = None,
) -> tuple[nn.Linear, float]:
    """
    Train a linear probe and report its held-out accuracy.

    Args:
        table (FeatureTable): Training features.
        opts (ProbeOpts): Probe options; `opts.seed` fixes the split, the init and the batches.
        test (Optional[FeatureTable]): Designated test features; a seeded `holdout_fraction`
            split of `table` is used when None.
        logger (Optional[Logger]): Logger, module logger when None.

    Returns:
        tuple[nn.Linear, float]: Trained head and accuracy in [0, 1].

    Raises:
        ContractError: Fewer than two classes in the training rows, or empty held-out split.
    """
    logger = logger if isinstance(logger, Logger) else getLogger(__name__)
    seeds = SeedBank(opts.seed).child(STREAM_PROBE)
    train = table
    if test is None:
        train, test = split_table(table, opts.holdout_fraction, seeds.generator(STREAM_SPLITS))
    if torch.unique(train.labels).numel() < 2:
        raise ContractError("Linear probing needs at least two classes in the training rows")
    num_classes = max(table.num_classes, test.num_classes)
    head = init_linear_head(train.dim, num_classes, seeds.generator("head"))
    fit_linear_head(
        head, lambda _: (train.features, train.labels), opts, seeds.generator("batches"), logger
    )
    accuracy = head_accuracy(head, test.features, test.labels)
    logger.info(
        "Linear probe on %d x %d features: accuracy %.4f", len(train), train.dim, accuracy
    )
    return head, accuracy
