"""
Noise-conditional classifier.

A two-layer MLP reads the pooled tap features of a frozen network at the input level, shifted by
a learned per-level embedding: p_t(y | x_t) = softmax(g(f_t(x_t) + tau(t))). Because the features
come from the denoising network itself, one forward pass yields both the noise prediction and the
class logits, which is what classifier guidance needs.

Classes:
    - ClassifierHead: tau table + MLP.
    - NoiseConditionalClassifier: Frozen network + head.
    - NoiseSweep: Accuracy per level and its Spearman correlation with the level.

Functions:
    - train_noise_cond_classifier(net, tap, dataset, sched, opts, ...) -> ClassifierHead
    - classify_noised(head, encoder_fn, x_t, t) -> tuple[torch.Tensor, torch.Tensor]
    - accuracy_vs_noise(classifier, dataset, sched, ts, generator) -> NoiseSweep
    - guidance_report(net, classifier, sched, target_label, scales, n, seed) -> list[dict]
"""

import math
from dataclasses import dataclass
from logging import Logger, getLogger
from typing import Callable, Optional, Sequence, Union

import torch
import torch.nn.functional as F
from scipy import stats
from torch import nn
from tqdm import tqdm

from ..backbone import DDAENetwork, TapId, global_average_pool
from ..config import MetricOpts
from ..config.defaults import DEFAULT_PROBE_BATCH_SIZE, DEFAULT_PROBE_LEARNING_RATE
from ..corruption import ImageBatch, NoiseSchedule, noise
from ..exceptions import ContractError
from ..sampler import GuidanceSpec, sample
from ..trainer import make_optimizer, sample_levels
from ..utilities.digest import module_digest
from ..utilities.records import RecordSink
from ..utilities.seeding import STREAM_METRICS, SeedBank

Levels = Union[int, torch.Tensor]
EncoderFn = Callable[[torch.Tensor, Levels], torch.Tensor]


class ClassifierHead(nn.Module):
    """
    g(f + tau(t)).

    The level embedding starts at zero, so an untrained head sees the plain features.

    Attributes:
        tau (nn.Embedding): [levels, feature_dim] table, row t - 1 for level t.
        mlp (nn.Sequential): Linear -> SiLU -> Linear.
    """

    def __init__(self, feature_dim: int, num_classes: int, levels: int, hidden: int) -> None:
        super().__init__()
        self.levels = levels
        self.num_classes = num_classes
        self.tau = nn.Embedding(levels, feature_dim)
        nn.init.zeros_(self.tau.weight)
        self.mlp = nn.Sequential(
            nn.Linear(feature_dim, hidden), nn.SiLU(), nn.Linear(hidden, num_classes)
        )

    def forward(self, features: torch.Tensor, t: Levels) -> torch.Tensor:
        if isinstance(t, int):
            t = torch.full((features.shape[0],), t, dtype=torch.int64)
        t = t.to(features.device).reshape(-1)
        if t.numel() == 1:
            t = t.expand(features.shape[0])
        if bool((t < 1).any()) or bool((t > self.levels).any()):
            raise ContractError(f"Levels outside [1, {self.levels}]")
        return self.mlp(features + self.tau(t - 1).to(features.dtype))


def classify_noised(
    head: ClassifierHead, encoder_fn: EncoderFn, x_t: torch.Tensor, t: Levels
) -> tuple[torch.Tensor, torch.Tensor]:
    """
    Logits and log p_t(y | x_t); differentiable w.r.t. x_t.

    Returns:
        tuple[torch.Tensor, torch.Tensor]: logits [N, classes], log-softmax [N, classes].
    """
    logits = head(encoder_fn(x_t, t), t)
    return logits, F.log_softmax(logits, dim=1)


class NoiseConditionalClassifier(nn.Module):
    """
    Frozen denoising network plus a classifier head on one of its taps.

    Attributes:
        net (DDAENetwork): Full network (not trained here).
        tap (TapId): Feature site.
        head (ClassifierHead): Trained head.
    """

    def __init__(self, net: DDAENetwork, tap: Union[TapId, str], head: ClassifierHead) -> None:
        super().__init__()
        self.net = net
        self.tap = net.tap(tap)
        self.head = head

    def features(self, x_t: torch.Tensor, t: Levels) -> torch.Tensor:
        """Pooled tap activation (the pass stops at the tap)."""
        return global_average_pool(self.net.activations(x_t, t, [self.tap])[self.tap.key])

    def forward(self, x_t: torch.Tensor, t: Levels) -> tuple[torch.Tensor, torch.Tensor]:
        """Noise prediction and logits from one pass of the network."""
        eps, activation = self.net.forward_with_tap(x_t, t, self.tap)
        return eps, self.head(global_average_pool(activation), t)

    def log_prob(self, x_t: torch.Tensor, t: Levels) -> torch.Tensor:
        """log p_t(y | x_t) [N, classes]."""
        return classify_noised(self.head, self.features, x_t, t)[1]


# pylint: disable=too-many-arguments, too-many-positional-arguments, too-many-locals
def train_noise_cond_classifier(
    net: DDAENetwork,
    tap: Union[TapId, str],
    dataset: ImageBatch,
    sched: NoiseSchedule,
    opts: MetricOpts,
    batch_size: int = DEFAULT_PROBE_BATCH_SIZE,
    learning_rate: float = DEFAULT_PROBE_LEARNING_RATE,
    seed: int = 0,
    sink: Optional[RecordSink] = None,
    progress: bool = False,
    logger: Optional[Logger] = None,
) -> ClassifierHead:
    """
    Train a classifier head over uniformly drawn levels on a frozen network.

    Args:
        net (DDAENetwork): Frozen network; its weights are hashed before and after training.
        tap (Union[TapId, str]): Feature site.
        dataset (ImageBatch): Labelled clean images.
        sched (NoiseSchedule): Corruption schedule.
        opts (MetricOpts): `classifier_hidden` and `classifier_epochs`.
        batch_size (int): Images per step.
        learning_rate (float): Adam learning rate.
        seed (int): Seed of the init, batch order, levels and noise.
        sink (Optional[RecordSink]): Receives one ``metric/classifier_loss`` record per epoch.
        progress (bool): Show a tqdm bar over epochs.
        logger (Optional[Logger]): Logger, module logger when None.

    Raises:
        ContractError: Unlabelled data, or the network weights changed during training.
    """
    logger = logger if isinstance(logger, Logger) else getLogger(__name__)
    if dataset.labels is None or len(dataset) == 0:
        raise ContractError("The classifier needs a nonempty labelled dataset")
    resolved = net.tap(tap)
    seeds = SeedBank(seed).child(STREAM_METRICS, "classifier")
    before = module_digest(net)
    device = next(net.parameters()).device
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seeds.seed("init"))
        head = ClassifierHead(
            net.tap_channels(resolved), int(dataset.num_classes or 0), sched.levels,
            opts.classifier_hidden,
        ).to(device)
    optimizer = make_optimizer(head.parameters(), learning_rate)
    generator = seeds.generator("train")
    was_training = net.training
    net.eval()
    try:
        for epoch in tqdm(range(opts.classifier_epochs), disable=not progress, leave=False):
            order = torch.randperm(len(dataset), generator=generator)
            total = 0.0
            for start in range(0, len(dataset), batch_size):
                index = order[start : start + batch_size]
                x0, labels = dataset.data[index], dataset.labels[index]
                t = sample_levels(index.numel(), sched.levels, generator)
                eps = torch.randn(x0.shape, generator=generator, dtype=x0.dtype)
                x_t = noise(x0, t, eps, sched).to(device)
                with torch.no_grad():
                    activation = net.activations(x_t, t.to(device), [resolved])[resolved.key]
                logits = head(global_average_pool(activation), t.to(device))
                loss = F.cross_entropy(logits, labels.to(device))
                optimizer.zero_grad(set_to_none=True)
                loss.backward()
                optimizer.step()
                total += float(loss.detach()) * index.numel()
            mean_loss = total / len(dataset)
            logger.info(
                "Classifier epoch %d/%d loss %.5f", epoch + 1, opts.classifier_epochs, mean_loss
            )
            if sink is not None:
                sink.emit("metric", "classifier_loss", epoch + 1, mean_loss)
    finally:
        net.train(was_training)
    if module_digest(net) != before:
        raise ContractError("Network weights changed while training the classifier head")
    head.eval()
    return head


@dataclass
class NoiseSweep:
    """
    Accuracy of the noise-conditional classifier per level.

    Attributes:
        timesteps (list[int]): Levels, increasing.
        accuracies (list[float]): Accuracy at each level.
        spearman (float): Rank correlation between level and accuracy (NaN when constant).
    """

    timesteps: list[int]
    accuracies: list[float]
    spearman: float


@torch.no_grad()
def accuracy_vs_noise(
    classifier: NoiseConditionalClassifier,
    dataset: ImageBatch,
    sched: NoiseSchedule,
    ts: Sequence[int],
    generator: torch.Generator,
    batch_size: int = 256,
    sink: Optional[RecordSink] = None,
) -> NoiseSweep:
    """Accuracy on noised labelled images at each level of `ts`."""
    if dataset.labels is None or len(dataset) == 0:
        raise ContractError("The sweep needs a nonempty labelled dataset")
    levels = sorted({sched.check_level(t) for t in ts})
    device = next(classifier.parameters()).device
    was_training = classifier.training
    classifier.eval()
    accuracies = []
    for t in levels:
        correct = 0
        for start in range(0, len(dataset), batch_size):
            x0 = dataset.data[start : start + batch_size]
            eps = torch.randn(x0.shape, generator=generator, dtype=x0.dtype)
            x_t = noise(x0, t, eps, sched).to(device)
            predictions = classifier.log_prob(x_t, t).argmax(dim=1).cpu()
            correct += int((predictions == dataset.labels[start : start + batch_size]).sum())
        accuracies.append(correct / len(dataset))
        if sink is not None:
            sink.emit("metric", f"classifier_acc/{classifier.tap.key}", t, accuracies[-1])
    classifier.train(was_training)
    rho = math.nan
    if len(levels) > 1 and len(set(accuracies)) > 1:
        rho = float(stats.spearmanr(levels, accuracies).correlation)
    return NoiseSweep(levels, accuracies, rho)


# pylint: disable=too-many-arguments, too-many-positional-arguments
def guidance_report(
    net: DDAENetwork,
    classifier: NoiseConditionalClassifier,
    sched: NoiseSchedule,
    target_label: int,
    scales: Sequence[float],
    n: int,
    seed: int = 0,
    scaling: str = "variance",
    sink: Optional[RecordSink] = None,
    logger: Optional[Logger] = None,
) -> list[dict]:
    """
    Share of guided samples the classifier assigns to `target_label`, per guidance scale.

    All scales start from the same noise stream. The result is a report, not a pass / fail check.

    Returns:
        list[dict]: ``{"scale", "hit_rate"}`` per scale.
    """
    logger = logger if isinstance(logger, Logger) else getLogger(__name__)
    seeds = SeedBank(seed).child(STREAM_METRICS, "guidance")
    device = next(net.parameters()).device
    rows = []
    for scale in scales:
        guidance = GuidanceSpec(classifier.log_prob, target_label, float(scale), scaling)
        images = sample(net, sched, n, seeds.generator("sample"), guidance, logger=logger)
        with torch.no_grad():
            predictions = classifier.log_prob(images.data.to(device), 1).argmax(dim=1).cpu()
        hit_rate = float((predictions == target_label).double().mean())
        rows.append({"scale": float(scale), "hit_rate": hit_rate})
        logger.info("Guidance scale %g: %.3f of samples classified as %d", scale, hit_rate,
                    target_label)
        if sink is not None:
            sink.emit("sample", f"guidance_hit_rate/{target_label}/s={scale:g}", n, hit_rate)
    return rows
