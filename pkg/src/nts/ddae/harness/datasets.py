"""
Dataset ingestion.

Two on-disk formats are read into `ImageBatch` objects with pixels scaled to [-1, 1]:

    - CIFAR-10 binary batches: records of 3073 bytes (one label byte, then 3 x 32 x 32 pixel bytes,
      channel planar, row major).
    - PNG directories with a ``filename,label`` CSV file; images are center cropped to a square and
      resized to the network size.

Relative paths are resolved against the working directory first, then against ``$DDAE_DATA_DIR``.

Functions:
    - resolve_data_path(path) -> Path
    - load_cifar10_binary(path, limit=None) -> ImageBatch
    - load_png_directory(path, labels_csv, image_size=32, limit=None) -> ImageBatch
    - load_dataset(config, split="train") -> Optional[ImageBatch]
"""

import csv
import os
from logging import Logger, getLogger
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
import torch
from PIL import Image

from ..config import RunConfig
from ..config.defaults import DEFAULT_DATA_DIR_ENV, DEFAULT_NUM_CLASSES
from ..corruption import ImageBatch
from ..exceptions import DataFormatError

PathLike = Union[str, Path]

CIFAR_IMAGE_SIZE: int = 32
CIFAR_CHANNELS: int = 3
CIFAR_RECORD_BYTES: int = 1 + CIFAR_CHANNELS * CIFAR_IMAGE_SIZE * CIFAR_IMAGE_SIZE
CIFAR_TRAIN_FILES: tuple[str, ...] = tuple(f"data_batch_{n}.bin" for n in range(1, 6))
CIFAR_TEST_FILES: tuple[str, ...] = ("test_batch.bin",)


def resolve_data_path(path: PathLike) -> Path:
    """
    Locate a dataset file or directory.

    Raises:
        FileNotFoundError: Neither the path nor ``$DDAE_DATA_DIR/path`` exists.
    """
    candidate = Path(path).expanduser()
    if candidate.exists():
        return candidate
    root = os.environ.get(DEFAULT_DATA_DIR_ENV)
    if root and not candidate.is_absolute():
        rooted = Path(root).expanduser() / candidate
        if rooted.exists():
            return rooted
    raise FileNotFoundError(
        f"Dataset path {str(path)!r} not found (also looked under ${DEFAULT_DATA_DIR_ENV})"
    )


def _to_unit_range(pixels: np.ndarray) -> torch.Tensor:
    return torch.from_numpy(pixels.astype(np.float32) / 127.5 - 1.0)


def _read_cifar_file(path: Path) -> tuple[np.ndarray, np.ndarray]:
    raw = np.fromfile(path, dtype=np.uint8)
    if raw.size % CIFAR_RECORD_BYTES:
        offset = (raw.size // CIFAR_RECORD_BYTES) * CIFAR_RECORD_BYTES
        raise DataFormatError(
            f"File size {raw.size} is not a multiple of {CIFAR_RECORD_BYTES} bytes; "
            f"partial record at byte {offset}",
            str(path),
            offset,
        )
    records = raw.reshape(-1, CIFAR_RECORD_BYTES)
    labels = records[:, 0].astype(np.int64)
    bad = np.flatnonzero(labels >= DEFAULT_NUM_CLASSES)
    if bad.size:
        raise DataFormatError(
            f"Label {labels[bad[0]]} outside [0, {DEFAULT_NUM_CLASSES})",
            str(path),
            int(bad[0]) * CIFAR_RECORD_BYTES,
        )
    pixels = records[:, 1:].reshape(-1, CIFAR_CHANNELS, CIFAR_IMAGE_SIZE, CIFAR_IMAGE_SIZE)
    return pixels, labels


def load_cifar10_binary(
    path: Union[PathLike, Sequence[PathLike]],
    limit: Optional[int] = None,
    split: str = "train",
    logger: Optional[Logger] = None,
) -> ImageBatch:
    """
    Read CIFAR-10 binary batches.

    Args:
        path (Union[PathLike, Sequence[PathLike]]): A batch file, a list of batch files, or the
            ``cifar-10-batches-bin`` directory (its train or test files are read).
        limit (Optional[int]): Keep the first `limit` images.
        split (str): "train" or "test", used for directories.
        logger (Optional[Logger]): Logger, module logger when None.

    Returns:
        ImageBatch: float32 [N, 3, 32, 32] in [-1, 1], labels in [0, 10).

    Raises:
        FileNotFoundError: Missing file.
        DataFormatError: Size not a multiple of 3073 or label out of range, with the byte offset.
    """
    logger = logger if isinstance(logger, Logger) else getLogger(__name__)
    if isinstance(path, (str, Path)):
        resolved = resolve_data_path(path)
        if resolved.is_dir():
            names = CIFAR_TRAIN_FILES if split == "train" else CIFAR_TEST_FILES
            files = [resolved / name for name in names if (resolved / name).exists()]
            if not files:
                raise FileNotFoundError(f"No CIFAR-10 {split} batches in {resolved}")
        else:
            files = [resolved]
    else:
        files = [resolve_data_path(item) for item in path]
    pixels, labels = [], []
    for file in files:
        file_pixels, file_labels = _read_cifar_file(file)
        pixels.append(file_pixels)
        labels.append(file_labels)
        if limit is not None and sum(len(item) for item in labels) >= limit:
            break
    data = np.concatenate(pixels)[:limit]
    targets = np.concatenate(labels)[:limit]
    logger.info("Loaded %d CIFAR-10 images from %d file(s)", len(targets), len(pixels))
    return ImageBatch(_to_unit_range(data), torch.from_numpy(targets), DEFAULT_NUM_CLASSES)


def _load_png(path: Path, image_size: int) -> np.ndarray:
    with Image.open(path) as image:
        rgb = image.convert("RGB")
    width, height = rgb.size
    side = min(width, height)
    left, top = (width - side) // 2, (height - side) // 2
    square = rgb.crop((left, top, left + side, top + side))
    if side != image_size:
        square = square.resize((image_size, image_size), Image.Resampling.BICUBIC)
    return np.asarray(square, dtype=np.uint8).transpose(2, 0, 1)


# pylint: disable=too-many-locals
def load_png_directory(
    path: PathLike,
    labels_csv: Optional[PathLike] = None,
    image_size: int = 32,
    limit: Optional[int] = None,
    logger: Optional[Logger] = None,
) -> ImageBatch:
    """
    Read a directory of images listed in a ``filename,label`` CSV file.

    Args:
        path (PathLike): Image directory.
        labels_csv (Optional[PathLike]): Label file, ``<path>/labels.csv`` when None. A first row
            ``filename,label`` is treated as a header.
        image_size (int): Output side length.
        limit (Optional[int]): Keep the first `limit` rows.
        logger (Optional[Logger]): Logger, module logger when None.

    Raises:
        FileNotFoundError: Missing directory or label file.
        DataFormatError: Malformed row or missing image, `offset` is the 1-based CSV line.
    """
    logger = logger if isinstance(logger, Logger) else getLogger(__name__)
    root = resolve_data_path(path)
    csv_path = resolve_data_path(labels_csv) if labels_csv is not None else root / "labels.csv"
    if not csv_path.exists():
        raise FileNotFoundError(f"Label file {csv_path} not found")
    images, labels = [], []
    with open(csv_path, newline="", encoding="utf-8") as stream:
        for line, row in enumerate(csv.reader(stream), start=1):
            if not row or not "".join(row).strip():
                continue
            if line == 1 and [cell.strip().lower() for cell in row] == ["filename", "label"]:
                continue
            if len(row) != 2:
                raise DataFormatError(
                    f"Expected 'filename,label', got {len(row)} fields", str(csv_path), line
                )
            name, label = row[0].strip(), row[1].strip()
            try:
                value = int(label)
            except ValueError as exc:
                raise DataFormatError(
                    f"Label {label!r} is not an integer", str(csv_path), line
                ) from exc
            if value < 0:
                raise DataFormatError(f"Negative label {value}", str(csv_path), line)
            image_path = root / name
            if not image_path.is_file():
                raise DataFormatError(f"Image {image_path} not found", str(csv_path), line)
            images.append(_load_png(image_path, image_size))
            labels.append(value)
            if limit is not None and len(labels) >= limit:
                break
    if images:
        data = _to_unit_range(np.stack(images))
    else:
        data = torch.zeros(0, 3, image_size, image_size)
    targets = torch.tensor(labels, dtype=torch.int64)
    logger.info("Loaded %d images from %s", len(labels), root)
    return ImageBatch(data, targets)


def load_dataset(
    config: RunConfig, split: str = "train", logger: Optional[Logger] = None
) -> Optional[ImageBatch]:
    """
    Load the training (or designated test) split named by a run configuration.

    Returns:
        Optional[ImageBatch]: None for the test split when the configuration names none.

    Raises:
        FileNotFoundError: No dataset path configured or file missing.
    """
    path = config.dataset_path if split == "train" else config.test_path
    if path is None:
        if split == "train":
            raise FileNotFoundError("No dataset_path configured")
        return None
    limit = config.limit if split == "train" else None
    if config.dataset_format == "cifar10":
        return load_cifar10_binary(path, limit, split, logger)
    labels_csv = config.labels_csv if split == "train" else None
    return load_png_directory(path, labels_csv, config.network.image_size, limit, logger)
