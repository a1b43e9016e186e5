"""Test augmentations, learning-rate schedules and the batch producer."""

import pytest
import torch

try:
    from src.nts.ddae.corruption import ImageBatch
    from src.nts.ddae.exceptions import ContractError, DDAEConfigError
    from src.nts.ddae.trainer import (
        BatchProducer,
        augment,
        epoch_batches,
        horizontal_flip,
        lr_factor,
        make_lr_scheduler,
        make_optimizer,
        pad_crop,
    )
except ModuleNotFoundError:
    from nts.ddae.corruption import ImageBatch
    from nts.ddae.exceptions import ContractError, DDAEConfigError
    from nts.ddae.trainer import (
        BatchProducer,
        augment,
        epoch_batches,
        horizontal_flip,
        lr_factor,
        make_lr_scheduler,
        make_optimizer,
        pad_crop,
    )

# pylint: disable=import-error,unused-import,redefined-outer-name
from tests.fixtures import tiny_data, logger_fixture


def test_horizontal_flip() -> None:
    """p=1 mirrors every image, p=0 none."""
    x = torch.arange(2 * 3 * 4 * 4, dtype=torch.float32).reshape(2, 3, 4, 4)
    generator = torch.Generator().manual_seed(0)
    assert torch.equal(horizontal_flip(x, generator, p=1.0), torch.flip(x, dims=(3,)))
    assert horizontal_flip(x, generator, p=0.0) is x


def test_pad_crop() -> None:
    """Crops keep the shape and only ever shift content or bring in the fill value."""
    x = torch.ones(16, 3, 8, 8)
    generator = torch.Generator().manual_seed(1)
    out = pad_crop(x, generator, padding=2)
    assert out.shape == x.shape
    assert set(torch.unique(out).tolist()) <= {-1.0, 1.0}
    assert pad_crop(x, generator, padding=0) is x
    first = pad_crop(x, torch.Generator().manual_seed(3))
    second = pad_crop(x, torch.Generator().manual_seed(3))
    assert torch.equal(first, second)


def test_augment_names() -> None:
    """No names is the identity, unknown names are configuration errors."""
    x = torch.randn(4, 3, 8, 8, generator=torch.Generator().manual_seed(2))
    assert torch.equal(augment(x, [], torch.Generator()), x)
    with pytest.raises(DDAEConfigError):
        augment(x, ["rotate"], torch.Generator())


def test_lr_factor() -> None:
    """Warm-up, constant and cosine multipliers."""
    assert lr_factor(5, 10, "constant") == 1.0
    assert lr_factor(0, 10, "cosine") == pytest.approx(1.0)
    assert lr_factor(5, 10, "cosine") == pytest.approx(0.5)
    assert lr_factor(10, 10, "cosine") == pytest.approx(0.0)
    assert lr_factor(50, 10, "cosine") == pytest.approx(0.0)
    assert lr_factor(0, 10, "cosine", warmup_steps=4) == pytest.approx(0.25)
    assert lr_factor(3, 10, "constant", warmup_steps=4) == pytest.approx(1.0)
    assert lr_factor(4, 10, "cosine", warmup_steps=4) == pytest.approx(1.0)
    with pytest.raises(DDAEConfigError):
        lr_factor(0, 10, "linear")


def test_scheduler_drives_the_optimizer() -> None:
    """The per-step scheduler scales the base learning rate."""
    param = torch.nn.Parameter(torch.zeros(1))
    optimizer = make_optimizer([param], 0.1)
    scheduler = make_lr_scheduler(optimizer, "cosine", 4)
    rates = []
    for _ in range(4):
        rates.append(optimizer.param_groups[0]["lr"])
        optimizer.step()
        scheduler.step()
    expected = [0.1, 0.1 * 0.8535533905932737, 0.05, 0.1 * 0.14644660940672627]
    assert rates == pytest.approx(expected)


def test_epoch_batches_cover_dataset(tiny_data) -> None:
    """One epoch visits every image once; the last batch may be short."""
    batches = list(epoch_batches(tiny_data, 10, [], torch.Generator().manual_seed(0)))
    assert [len(labels) for _, labels in batches] == [10, 10, 10, 2]
    images = torch.cat([images for images, _ in batches])
    order = sorted(range(len(images)), key=lambda n: images[n].sum().item())
    reference = sorted(range(len(tiny_data)), key=lambda n: tiny_data.data[n].sum().item())
    assert torch.equal(images[order], tiny_data.data[reference])


def test_unlabelled_batches() -> None:
    """Images without labels come with -1 labels."""
    data = ImageBatch(torch.zeros(3, 3, 4, 4))
    (_, labels), = list(epoch_batches(data, 8, [], torch.Generator()))
    assert labels.tolist() == [-1, -1, -1]


def test_producer_matches_direct_iteration(tiny_data, logger_fixture) -> None:
    """The threaded producer yields the same batches in the same order."""
    flip = ["horizontal_flip"]
    direct = list(epoch_batches(tiny_data, 8, flip, torch.Generator().manual_seed(4)))
    producer = BatchProducer(
        tiny_data, 8, flip, torch.Generator().manual_seed(4), 1, logger_fixture
    )
    assert len(producer) == 4
    with producer as batches:
        threaded = list(batches)
    assert len(threaded) == len(direct)
    for (a_images, a_labels), (b_images, b_labels) in zip(direct, threaded):
        assert torch.equal(a_images, b_images) and torch.equal(a_labels, b_labels)


def test_producer_reports_worker_errors(tiny_data) -> None:
    """An exception inside the worker is raised in the consumer."""
    with BatchProducer(tiny_data, 8, ["rotate"], torch.Generator()) as batches:
        with pytest.raises(DDAEConfigError):
            list(batches)


def test_producer_stops_early(tiny_data) -> None:
    """Leaving the block after one batch stops the worker."""
    with BatchProducer(tiny_data, 1, [], torch.Generator(), prefetch=1) as batches:
        for _ in batches:
            break


def test_producer_needs_images() -> None:
    """An empty dataset is refused."""
    with pytest.raises(ContractError):
        BatchProducer(ImageBatch(torch.zeros(0, 3, 4, 4)), 4, [], torch.Generator())


if __name__ == "__main__":
    pytest.main()
