"""
End-to-end fine-tuning of truncated encoders.

Clean images go through the encoder at its fixed level; the encoder weights and a linear head are
trained together with cross entropy.

Classes:
    - EncoderClassifier: Encoder followed by a linear head.

Functions:
    - classifier_accuracy(model, images) -> float
    - finetune(encoder, dataset, opts, test=None) -> float
    - train_from_scratch(config, tap, t_fixed, dataset, opts, test=None) -> float
"""

import copy
from logging import Logger, getLogger
from typing import Optional, Union

import torch
import torch.nn.functional as F
from torch import nn
from tqdm import tqdm

from .grid import split_images
from .linear import init_linear_head
from ..backbone import Encoder, TapId, build_ddae, truncate
from ..config import DDAEConfig, ProbeOpts
from ..corruption import ImageBatch
from ..exceptions import ContractError
from ..trainer import epoch_batches, make_lr_scheduler, make_optimizer
from ..utilities.records import RecordSink
from ..utilities.seeding import SeedBank

STREAM_FINETUNE = "finetune"


class EncoderClassifier(nn.Module):
    """logits = head(encoder(x))."""

    def __init__(self, encoder: Encoder, head: nn.Linear) -> None:
        super().__init__()
        self.encoder = encoder
        self.head = head

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.head(self.encoder(x))


@torch.no_grad()
def classifier_accuracy(model: nn.Module, images: ImageBatch, batch_size: int = 256) -> float:
    """Top-1 accuracy of `model` on labelled images, evaluated in eval mode."""
    if images.labels is None or len(images) == 0:
        raise ContractError("Accuracy needs a nonempty labelled split")
    device = next(model.parameters()).device
    was_training = model.training
    model.eval()
    correct = 0
    for start in range(0, len(images), batch_size):
        x = images.data[start : start + batch_size].to(device)
        predictions = model(x).argmax(dim=1).cpu()
        correct += int((predictions == images.labels[start : start + batch_size]).sum())
    model.train(was_training)
    return correct / len(images)


# pylint: disable=too-many-arguments, too-many-positional-arguments, too-many-locals
def finetune(
    encoder: Encoder,
    dataset: ImageBatch,
    opts: ProbeOpts,
    test: Optional[ImageBatch] = None,
    in_place: bool = False,
    sink: Optional[RecordSink] = None,
    progress: bool = False,
    logger: Optional[Logger] = None,
) -> float:
    """
    Train encoder and head end to end on clean images.

    Args:
        encoder (Encoder): Truncated encoder; copied unless `in_place`.
        dataset (ImageBatch): Labelled training images.
        opts (ProbeOpts): Epochs, batch size, learning rate, schedule, warm-up, augmentations,
            weight decay, holdout fraction and seed.
        test (Optional[ImageBatch]): Designated test split; a seeded holdout when None.
        in_place (bool): Train `encoder` itself.
        sink (Optional[RecordSink]): Receives ``finetune`` loss and accuracy records.
        progress (bool): Show a tqdm bar over epochs.
        logger (Optional[Logger]): Logger, module logger when None.

    Returns:
        float: Held-out accuracy. With zero epochs this is the accuracy of the initial head on the
        frozen encoder.
    """
    logger = logger if isinstance(logger, Logger) else getLogger(__name__)
    if dataset.labels is None:
        raise ContractError("Fine-tuning needs a labelled dataset")
    seeds = SeedBank(opts.seed).child(STREAM_FINETUNE)
    train, held = split_images(dataset, test, opts)
    encoder = encoder if in_place else copy.deepcopy(encoder)
    device = encoder.t_input.device
    num_classes = max(int(train.num_classes or 0), int(held.num_classes or 0))
    head = init_linear_head(encoder.feature_dim, num_classes, seeds.generator("head"))
    model = EncoderClassifier(encoder, head.to(device))

    if opts.epochs > 0:
        torch.manual_seed(seeds.seed("dropout"))
        optimizer = make_optimizer(model.parameters(), opts.learning_rate, opts.weight_decay)
        steps = -(-len(train) // opts.batch_size)
        scheduler = make_lr_scheduler(
            optimizer, opts.lr_schedule, steps * opts.epochs, steps * opts.warmup_epochs
        )
        batch_gen = seeds.generator("batches")
        for epoch in tqdm(range(opts.epochs), disable=not progress, leave=False):
            model.train()
            total = 0.0
            batches = epoch_batches(train, opts.batch_size, opts.augmentations, batch_gen)
            for images, labels in batches:
                loss = F.cross_entropy(model(images.to(device)), labels.to(device))
                optimizer.zero_grad(set_to_none=True)
                loss.backward()
                optimizer.step()
                scheduler.step()
                total += float(loss.detach()) * images.shape[0]
            mean_loss = total / len(train)
            logger.info("Fine-tune epoch %d/%d loss %.5f", epoch + 1, opts.epochs, mean_loss)
            if sink is not None:
                sink.emit("finetune", "loss", epoch + 1, mean_loss)

    accuracy = classifier_accuracy(model, held)
    logger.info("Fine-tuned %s at t=%d: accuracy %.4f", encoder.tap.key, encoder.t_fixed, accuracy)
    if sink is not None:
        sink.emit("finetune", f"acc/{encoder.tap.key}", encoder.t_fixed, accuracy)
    return accuracy


# pylint: disable=too-many-arguments, too-many-positional-arguments
def train_from_scratch(
    config: DDAEConfig,
    tap: Union[TapId, str],
    t_fixed: int,
    dataset: ImageBatch,
    opts: ProbeOpts,
    test: Optional[ImageBatch] = None,
    levels: Optional[int] = None,
    seed: int = 0,
    sink: Optional[RecordSink] = None,
    logger: Optional[Logger] = None,
) -> float:
    """
    Supervised reference: the same truncated architecture trained from a random init.

    Returns:
        float: Held-out accuracy.
    """
    net = build_ddae(config, seed, levels)
    encoder = truncate(net, tap, t_fixed)
    return finetune(encoder, dataset, opts, test, in_place=True, sink=sink, logger=logger)
