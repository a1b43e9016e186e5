"""Test dataset ingestion."""

import numpy as np
import pytest
from PIL import Image

try:
    from src.nts.ddae.config import RunConfig
    from src.nts.ddae.exceptions import DataFormatError
    from src.nts.ddae.harness import (
        load_cifar10_binary,
        load_dataset,
        load_png_directory,
        resolve_data_path,
    )
except ModuleNotFoundError:
    from nts.ddae.config import RunConfig
    from nts.ddae.exceptions import DataFormatError
    from nts.ddae.harness import (
        load_cifar10_binary,
        load_dataset,
        load_png_directory,
        resolve_data_path,
    )

# pylint: disable=import-error,unused-import,redefined-outer-name
from tests.fixtures import slow

RECORD = 3073


def cifar_records(labels) -> bytearray:
    """Black CIFAR-10 records with the given labels."""
    raw = bytearray(RECORD * len(labels))
    for n, label in enumerate(labels):
        raw[n * RECORD] = label
    return raw


def test_cifar_pixel_layout(tmp_path) -> None:
    """Pixel (channel 1, row 2, column 3) of the first record sits at byte 1 + 1024 + 2*32 + 3."""
    raw = cifar_records([7, 2])
    raw[1 + 1024 + 2 * 32 + 3] = 255
    path = tmp_path / "data_batch_1.bin"
    path.write_bytes(bytes(raw))
    images = load_cifar10_binary(path)
    assert images.data.shape == (2, 3, 32, 32)
    assert images.labels.tolist() == [7, 2] and images.num_classes == 10
    assert float(images.data[0, 1, 2, 3]) == 1.0
    assert float(images.data.sum()) == -2 * 3 * 32 * 32 + 2.0
    assert len(load_cifar10_binary(path, limit=1)) == 1


def test_cifar_directory(tmp_path) -> None:
    """Directories are read through their train or test batch files."""
    (tmp_path / "data_batch_1.bin").write_bytes(bytes(cifar_records([1, 2])))
    (tmp_path / "data_batch_2.bin").write_bytes(bytes(cifar_records([3])))
    (tmp_path / "test_batch.bin").write_bytes(bytes(cifar_records([4])))
    assert load_cifar10_binary(tmp_path).labels.tolist() == [1, 2, 3]
    assert load_cifar10_binary(tmp_path, split="test").labels.tolist() == [4]
    assert load_cifar10_binary(tmp_path, limit=2).labels.tolist() == [1, 2]


def test_cifar_errors(tmp_path) -> None:
    """Partial records and bad labels report the byte offset; missing files are not found."""
    partial = tmp_path / "partial.bin"
    partial.write_bytes(bytes(cifar_records([0])) + bytes(5))
    with pytest.raises(DataFormatError) as error:
        load_cifar10_binary(partial)
    assert error.value.offset == RECORD and error.value.path == str(partial)
    bad_label = tmp_path / "label.bin"
    bad_label.write_bytes(bytes(cifar_records([0, 10])))
    with pytest.raises(DataFormatError) as error:
        load_cifar10_binary(bad_label)
    assert error.value.offset == RECORD
    with pytest.raises(FileNotFoundError):
        load_cifar10_binary(tmp_path / "missing.bin")
    with pytest.raises(FileNotFoundError):
        load_cifar10_binary(tmp_path)


def test_data_dir_lookup(tmp_path, monkeypatch) -> None:
    """Relative paths fall back to $DDAE_DATA_DIR."""
    (tmp_path / "batch.bin").write_bytes(bytes(cifar_records([5])))
    monkeypatch.chdir(tmp_path.parent)
    monkeypatch.setenv("DDAE_DATA_DIR", str(tmp_path))
    assert resolve_data_path("batch.bin") == tmp_path / "batch.bin"
    monkeypatch.delenv("DDAE_DATA_DIR")
    with pytest.raises(FileNotFoundError):
        resolve_data_path("batch.bin")


def test_png_directory(tmp_path) -> None:
    """Images are center cropped, resized and labelled from the CSV file."""
    Image.new("RGB", (64, 64), (255, 0, 0)).save(tmp_path / "red.png")
    wide = np.zeros((64, 80, 3), dtype=np.uint8)
    wide[:, 8:72] = (0, 255, 0)
    Image.fromarray(wide).save(tmp_path / "green.png")
    (tmp_path / "labels.csv").write_text("filename,label\nred.png,3\n\ngreen.png,1\n")
    images = load_png_directory(tmp_path, image_size=32)
    assert images.data.shape == (2, 3, 32, 32)
    assert images.labels.tolist() == [3, 1] and images.num_classes == 4
    assert float(images.data[0, 0].min()) == 1.0 and float(images.data[0, 1].max()) == -1.0
    assert float(images.data[1, 1].min()) == 1.0 and float(images.data[1, 0].max()) == -1.0
    assert len(load_png_directory(tmp_path, limit=1)) == 1


def test_png_errors(tmp_path) -> None:
    """Malformed rows report their CSV line."""
    Image.new("RGB", (32, 32)).save(tmp_path / "a.png")
    for text, line in (
        ("a.png,0\na.png,x\n", 2),
        ("a.png,0,9\n", 1),
        ("a.png,-1\n", 1),
        ("a.png,0\nb.png,1\n", 2),
    ):
        (tmp_path / "labels.csv").write_text(text)
        with pytest.raises(DataFormatError) as error:
            load_png_directory(tmp_path)
        assert error.value.offset == line
    with pytest.raises(FileNotFoundError):
        load_png_directory(tmp_path, tmp_path / "other.csv")


def test_load_dataset(tmp_path) -> None:
    """The configured format and paths are honoured; a missing test split is None."""
    (tmp_path / "train.bin").write_bytes(bytes(cifar_records([1, 2, 3])))
    config = RunConfig(dataset_path=str(tmp_path / "train.bin"), limit=2)
    assert load_dataset(config).labels.tolist() == [1, 2]
    assert load_dataset(config, "test") is None
    with pytest.raises(FileNotFoundError):
        load_dataset(RunConfig())


@slow
def test_cifar10_from_data_dir() -> None:
    """The real training batches load with the documented shape and range."""
    images = load_cifar10_binary("cifar-10-batches-bin", limit=256)
    assert images.data.shape == (256, 3, 32, 32)
    assert float(images.data.min()) >= -1.0 and float(images.data.max()) <= 1.0


if __name__ == "__main__":
    pytest.main()
