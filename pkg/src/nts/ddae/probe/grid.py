"""
Layer x noise-level grid search.

Every (tap, t) cell gets its own linear probe. Cells only read the frozen network, so they are
probed concurrently on a thread pool; each cell owns its generators (derived from the probe seed,
the tap key and t), which makes the report independent of the worker count.

The best cell maximizes held-out accuracy; ties go to the smallest t, then to the tap that comes
first in the forward pass.

Classes:
    - GridCell: Result of one probe.
    - GridReport: All cells, the best one and the search settings.

Functions:
    - probe_cell(net, tap, t, train, test, sched, opts) -> GridCell
    - select_best(cells, tap_order) -> GridCell
    - grid_search(net, dataset, taps, ts, sched, opts, ...) -> GridReport
"""

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from logging import Logger, getLogger
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

import torch
from torch import nn

from .features import extract_features
from .linear import fit_linear_head, head_accuracy, init_linear_head
from ..backbone import DDAENetwork, TapId, save_container
from ..config import ProbeOpts
from ..corruption import ImageBatch, NoiseSchedule
from ..exceptions import ContractError
from ..trainer import augment
from ..utilities.records import RecordSink
from ..utilities.seeding import STREAM_PROBE, STREAM_SPLITS, SeedBank

REPORT_FILE = "grid_report.json"
HEADS_FILE = "grid_heads.ddae"


@dataclass
class GridCell:
    """
    Probe result of one (tap, t) cell.

    Attributes:
        tap (TapId): Feature site.
        label (str): "k/K (ordinal block@res)".
        t (int): Level.
        accuracy (float): Held-out linear probe accuracy.
        head (Optional[nn.Linear]): Trained head (not serialized in the JSON report).
    """

    tap: TapId
    label: str
    t: int
    accuracy: float
    head: Optional[nn.Linear] = field(default=None, repr=False, compare=False)

    @property
    def head_ref(self) -> str:
        """Array prefix of the head in the heads container."""
        return f"{self.tap.key}/t={self.t}"

    def to_dict(self) -> dict:
        return {
            "tap": self.tap.key,
            "label": self.label,
            "t": self.t,
            "linear_acc": self.accuracy,
            "head_ref": f"{HEADS_FILE}#{self.head_ref}",
        }


@dataclass
class GridReport:
    """
    Outcome of a grid search.

    Attributes:
        cells (list[GridCell]): Cells in probing order.
        best (GridCell): Argmax cell (ties: smallest t, then earliest tap).
        taps (list[str]): Searched tap keys.
        timesteps (list[int]): Searched levels.
        probe_opts (dict): Probe options used.
    """

    cells: list[GridCell]
    best: GridCell
    taps: list[str]
    timesteps: list[int]
    probe_opts: dict

    def cell(self, tap: Union[TapId, str], t: int) -> GridCell:
        """Look up a probed cell."""
        key = tap.key if isinstance(tap, TapId) else tap
        for cell in self.cells:
            if cell.tap.key == key and cell.t == t:
                return cell
        raise KeyError(f"No cell ({key}, t={t}) in the report")

    def to_dict(self) -> dict:
        return {
            "cells": [cell.to_dict() for cell in self.cells],
            "best": self.best.to_dict(),
            "search_spec": {
                "taps": list(self.taps),
                "timesteps": list(self.timesteps),
                "probe_opts": dict(self.probe_opts),
            },
        }

    def save(self, out_dir: Union[str, Path], logger: Optional[Logger] = None) -> Path:
        """Write the JSON report and a container with every trained head."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        arrays = {}
        for cell in self.cells:
            if cell.head is not None:
                arrays[f"{cell.head_ref}/weight"] = cell.head.weight.detach().float()
                arrays[f"{cell.head_ref}/bias"] = cell.head.bias.detach().float()
        if arrays:
            save_container(out / HEADS_FILE, arrays, logger=logger)
        path = out / REPORT_FILE
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True), encoding="utf-8")
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "GridReport":
        """Read a JSON report (heads are not loaded)."""
        data = json.loads(Path(path).read_text(encoding="utf-8"))

        def cell_of(entry: dict) -> GridCell:
            return GridCell(
                TapId.parse(entry["tap"]), entry["label"], int(entry["t"]),
                float(entry["linear_acc"]),
            )

        spec = data["search_spec"]
        return cls(
            cells=[cell_of(entry) for entry in data["cells"]],
            best=cell_of(data["best"]),
            taps=list(spec["taps"]),
            timesteps=[int(t) for t in spec["timesteps"]],
            probe_opts=dict(spec["probe_opts"]),
        )


def select_best(cells: Sequence[GridCell], tap_order: Mapping[str, int]) -> GridCell:
    """Highest accuracy; ties go to the smallest t, then the earliest tap."""
    if not cells:
        raise ContractError("No grid cells to select from")
    return min(cells, key=lambda cell: (-cell.accuracy, cell.t, tap_order[cell.tap.key]))


def split_images(
    dataset: ImageBatch, test: Optional[ImageBatch], opts: ProbeOpts
) -> tuple[ImageBatch, ImageBatch]:
    """(train, held-out) images: the designated test split, or a seeded holdout of `dataset`."""
    if test is not None:
        return dataset, test
    return dataset.split(opts.holdout_fraction, SeedBank(opts.seed).generator(STREAM_SPLITS))


# pylint: disable=too-many-arguments, too-many-positional-arguments
def probe_cell(
    net: DDAENetwork,
    tap: Union[TapId, str],
    t: int,
    train: ImageBatch,
    test: ImageBatch,
    sched: NoiseSchedule,
    opts: ProbeOpts,
    logger: Optional[Logger] = None,
) -> GridCell:
    """
    Train and evaluate the linear probe of one cell.

    With `opts.renoise_each_epoch` the training features are re-extracted every epoch from freshly
    augmented and noised images; otherwise one un-augmented noised copy is reused. Held-out
    features are extracted once from un-augmented images.
    """
    logger = logger if isinstance(logger, Logger) else getLogger(__name__)
    resolved = net.tap(tap)
    if train.labels is None or test.labels is None:
        raise ContractError("Grid probing needs labelled images")
    if torch.unique(train.labels).numel() < 2:
        raise ContractError("Linear probing needs at least two classes in the training images")
    seeds = SeedBank(opts.seed).child(STREAM_PROBE, resolved.key, t)

    def features_of(images: ImageBatch, generator: torch.Generator) -> torch.Tensor:
        return extract_features(
            net, resolved, t, images, sched, generator, opts.noising, logger=logger
        ).features

    if opts.renoise_each_epoch:

        def epoch_data(epoch: int) -> tuple[torch.Tensor, torch.Tensor]:
            generator = seeds.generator("train", epoch)
            images = ImageBatch(
                augment(train.data, opts.augmentations, generator), train.labels, train.num_classes
            )
            return features_of(images, generator), train.labels

    else:
        frozen = features_of(train, seeds.generator("train", 0))

        def epoch_data(epoch: int) -> tuple[torch.Tensor, torch.Tensor]:
            del epoch
            return frozen, train.labels

    num_classes = max(int(train.num_classes or 0), int(test.num_classes or 0))
    head = init_linear_head(net.tap_channels(resolved), num_classes, seeds.generator("head"))
    fit_linear_head(head, epoch_data, opts, seeds.generator("batches"), logger)
    accuracy = head_accuracy(head, features_of(test, seeds.generator("test")), test.labels)
    label = net.tap_label(resolved)
    logger.info("Cell %s (%s) t=%d: accuracy %.4f", resolved.key, label, t, accuracy)
    return GridCell(resolved, label, t, accuracy, head)


# pylint: disable=too-many-arguments, too-many-positional-arguments, too-many-locals
def grid_search(
    net: DDAENetwork,
    dataset: ImageBatch,
    taps: Sequence[Union[TapId, str]],
    ts: Sequence[int],
    sched: NoiseSchedule,
    opts: ProbeOpts,
    test: Optional[ImageBatch] = None,
    sink: Optional[RecordSink] = None,
    out_dir: Optional[Union[str, Path]] = None,
    logger: Optional[Logger] = None,
) -> GridReport:
    """
    Probe every (tap, t) cell and pick the best.

    With `opts.refine_stride = k > 1` the search first probes every k-th level (sorted), then the
    levels between the coarse neighbours of the best coarse level at the best tap only.

    Args:
        net (DDAENetwork): Frozen network.
        dataset (ImageBatch): Labelled training images.
        taps (Sequence[Union[TapId, str]]): Taps to search.
        ts (Sequence[int]): Levels to search.
        sched (NoiseSchedule): Schedule used for noising.
        opts (ProbeOpts): Probe options (`workers` cells run concurrently).
        test (Optional[ImageBatch]): Designated test split.
        sink (Optional[RecordSink]): Receives ``grid`` records (key ``acc/<tap>``, step t).
        out_dir (Optional[Union[str, Path]]): Writes the report and the heads when set.
        logger (Optional[Logger]): Logger, module logger when None.

    Raises:
        ContractError: Empty tap or level list, or a level outside [1, T].
        UnknownTapError: Tap not in the network.
    """
    logger = logger if isinstance(logger, Logger) else getLogger(__name__)
    if not taps or not ts:
        raise ContractError("Grid search needs at least one tap and one level")
    resolved = list(dict.fromkeys(net.tap(tap) for tap in taps))
    levels = sorted({sched.check_level(t) for t in ts})
    tap_order = {tap.key: n for n, tap in enumerate(net.tap_index)}
    train, held = split_images(dataset, test, opts)
    was_training = net.training
    net.eval()

    def run(pairs: list[tuple[TapId, int]]) -> list[GridCell]:
        if opts.workers == 1:
            return [probe_cell(net, tap, t, train, held, sched, opts, logger) for tap, t in pairs]
        with ThreadPoolExecutor(max_workers=opts.workers) as pool:
            return list(
                pool.map(
                    lambda pair: probe_cell(
                        net, pair[0], pair[1], train, held, sched, opts, logger
                    ),
                    pairs,
                )
            )

    try:
        stride = opts.refine_stride or 1
        if stride > 1:
            coarse = levels[::stride]
            cells = run([(tap, t) for tap in resolved for t in coarse])
            best = select_best(cells, tap_order)
            position = levels.index(best.t)
            neighbourhood = levels[max(position - stride + 1, 0) : position + stride]
            fine = [t for t in neighbourhood if t not in coarse]
            logger.info("Refining around %s t=%d with levels %s", best.tap.key, best.t, fine)
            cells += run([(best.tap, t) for t in fine])
        else:
            cells = run([(tap, t) for tap in resolved for t in levels])
    finally:
        net.train(was_training)

    best = select_best(cells, tap_order)
    report = GridReport(
        cells=cells,
        best=best,
        taps=[tap.key for tap in resolved],
        timesteps=levels,
        probe_opts=opts.to_dict(),
    )
    if sink is not None:
        for cell in cells:
            sink.emit("grid", f"acc/{cell.tap.key}", cell.t, cell.accuracy)
        sink.emit("grid", f"best/{best.tap.key}", best.t, best.accuracy)
    if out_dir is not None:
        report.save(out_dir, logger)
    logger.info("Best cell %s (%s) t=%d: accuracy %.4f", best.tap.key, best.label, best.t,
                best.accuracy)
    return report
