"""Fixtures for testing."""

import os
from logging import getLogger

import pytest
import torch

try:
    from src.nts.ddae.backbone import build_ddae
    from src.nts.ddae.config import DDAEConfig, MetricOpts, ProbeOpts, RunConfig, TrainOpts
    from src.nts.ddae.corruption import ImageBatch, make_ve_schedule, make_vp_schedule
except ModuleNotFoundError:
    from nts.ddae.backbone import build_ddae
    from nts.ddae.config import DDAEConfig, MetricOpts, ProbeOpts, RunConfig, TrainOpts
    from nts.ddae.corruption import ImageBatch, make_ve_schedule, make_vp_schedule


# pylint: disable=redefined-outer-name

TINY_LEVELS = 20

TINY_NETWORK = {
    "base_channels": 8,
    "channel_multipliers": [1, 2],
    "blocks_per_resolution": 1,
    "attention_resolutions": [4],
    "image_size": 8,
    "groups": 4,
}

slow = pytest.mark.skipif(
    not os.environ.get("DDAE_DATA_DIR"), reason="DDAE_DATA_DIR with CIFAR-10 batches not set"
)


def tiny_images(count: int, num_classes: int = 2, seed: int = 0) -> ImageBatch:
    """Two-class toy images: class 0 dark with a bright left half, class 1 the mirror image."""
    generator = torch.Generator().manual_seed(seed)
    labels = torch.arange(count) % num_classes
    data = torch.full((count, 3, 8, 8), -0.6)
    for n in range(count):
        if labels[n] % 2 == 0:
            data[n, :, :, :4] = 0.6
        else:
            data[n, :, :, 4:] = 0.6
    data = (data + 0.1 * torch.randn(data.shape, generator=generator)).clamp(-1.0, 1.0)
    return ImageBatch(data, labels, num_classes)


@pytest.fixture
def logger_fixture():
    """Set up the test environment."""
    logger = getLogger()
    logger.setLevel("DEBUG")
    yield logger


@pytest.fixture
def tiny_config():
    """Small network shape: 8 channels, 8x8 images, two stages."""
    return DDAEConfig(**TINY_NETWORK)


@pytest.fixture
def vp_schedule():
    """Short VP schedule."""
    return make_vp_schedule(TINY_LEVELS, 1e-3, 0.2)


@pytest.fixture
def ve_schedule():
    """Short VE schedule."""
    return make_ve_schedule(TINY_LEVELS, 0.01, 10.0)


@pytest.fixture
def tiny_net(tiny_config):
    """Randomly initialized tiny network."""
    return build_ddae(tiny_config, seed=0, levels=TINY_LEVELS).eval()


@pytest.fixture
def tiny_data():
    """32 labelled toy images."""
    return tiny_images(32)


@pytest.fixture
def train_opts():
    """Fast pre-training options."""
    return TrainOpts(
        epochs=2, batch_size=8, learning_rate=1e-3, checkpoint_every=1, augmentations=[], workers=1
    )


@pytest.fixture
def probe_opts():
    """Fast probing options."""
    return ProbeOpts(
        epochs=3, batch_size=16, learning_rate=1e-2, lr_schedule="constant", augmentations=[]
    )


@pytest.fixture
def metric_opts():
    """Fast metric options."""
    return MetricOpts(
        n_pairs=16, fid_samples=8, pca_components=4, classifier_hidden=16, classifier_epochs=1
    )


@pytest.fixture
def run_config(tmp_path):
    """Tiny end-to-end run configuration writing under a temporary directory."""
    return RunConfig.from_dict(
        {
            "schedule": {"kind": "VP", "levels": TINY_LEVELS, "beta_min": 1e-3, "beta_max": 0.2},
            "network": dict(TINY_NETWORK),
            "train": {
                "epochs": 1,
                "batch_size": 8,
                "learning_rate": 1e-3,
                "checkpoint_every": 1,
                "augmentations": [],
                "workers": 1,
            },
            "probe": {
                "epochs": 1,
                "batch_size": 16,
                "augmentations": [],
                "lr_schedule": "constant",
            },
            "metrics": {
                "n_pairs": 8,
                "fid_samples": 4,
                "pca_components": 2,
                "classifier_hidden": 8,
                "classifier_epochs": 1,
            },
            "taps": ["up.0.0@8", "up.0.1@8"],
            "timesteps": [1, 5],
            "out_dir": str(tmp_path / "runs"),
            "seed": 3,
        }
    )
