"""Test Gaussian summaries, Frechet distance and the embedders."""

import numpy as np
import pytest
import torch

try:
    from src.nts.ddae.backbone import truncate
    from src.nts.ddae.corruption import ImageBatch, as_tensor
    from src.nts.ddae.exceptions import ContractError, NumericalError
    from src.nts.ddae.repmetrics import (
        EncoderEmbedder,
        GaussianSummary,
        PixelPCAEmbedder,
        fid,
        frechet_distance,
        gaussian_summary,
    )
except ModuleNotFoundError:
    from nts.ddae.backbone import truncate
    from nts.ddae.corruption import ImageBatch, as_tensor
    from nts.ddae.exceptions import ContractError, NumericalError
    from nts.ddae.repmetrics import (
        EncoderEmbedder,
        GaussianSummary,
        PixelPCAEmbedder,
        fid,
        frechet_distance,
        gaussian_summary,
    )

# pylint: disable=import-error,unused-import,redefined-outer-name
from tests.fixtures import tiny_config, tiny_data, tiny_net, tiny_images


def diagonal(mean, variances) -> GaussianSummary:
    """Summary with a diagonal covariance."""
    return GaussianSummary(np.asarray(mean, dtype=np.float64), np.diag(variances).astype(float))


def first_pixels(images) -> np.ndarray:
    """Four raw pixel values per image."""
    x = as_tensor(images)
    return x.reshape(x.shape[0], -1)[:, :4].double().numpy()


def test_one_dimensional_unit_shift() -> None:
    """Unit variances one apart."""
    assert frechet_distance(diagonal([0.0], [1.0]), diagonal([1.0], [1.0])) == pytest.approx(1.0)


def test_diagonal_closed_form() -> None:
    """Diagonal covariances: ||mu1 - mu2||^2 + sum (sqrt(s1) - sqrt(s2))^2."""
    a = diagonal([0.0, 0.0, 0.0], [1.0, 4.0, 9.0])
    b = diagonal([1.0, 2.0, 0.0], [4.0, 1.0, 1.0])
    assert frechet_distance(a, b) == pytest.approx(5.0 + 6.0, abs=1e-8)
    assert frechet_distance(b, a) == pytest.approx(11.0, abs=1e-8)
    assert frechet_distance(a, a) == pytest.approx(0.0, abs=1e-8)


def test_summary_checks() -> None:
    """Dimensions must match; asymmetric and indefinite covariances are refused."""
    with pytest.raises(ContractError):
        frechet_distance(diagonal([0.0], [1.0]), diagonal([0.0, 0.0], [1.0, 1.0]))
    with pytest.raises(ContractError):
        GaussianSummary(np.zeros(2), np.eye(3))
    with pytest.raises(NumericalError):
        GaussianSummary(np.zeros(2), np.array([[1.0, 0.5], [0.0, 1.0]]))
    with pytest.raises(NumericalError):
        frechet_distance(diagonal([0.0, 0.0], [1.0, -1.0]), diagonal([0.0, 0.0], [1.0, 1.0]))
    with pytest.raises(ContractError):
        gaussian_summary(np.zeros((1, 3)))


def test_gaussian_summary() -> None:
    """Sample mean and unbiased covariance, from numpy arrays or tensors."""
    rows = np.random.default_rng(0).normal(size=(50, 3))
    summary = gaussian_summary(torch.from_numpy(rows))
    assert np.allclose(summary.mean, rows.mean(axis=0))
    assert np.allclose(summary.covariance, np.cov(rows, rowvar=False))
    assert summary.count == 50 and summary.dim == 3


def test_fid_of_a_shift() -> None:
    """Shifting every embedded coordinate by c moves the distance by D * c^2."""
    real = ImageBatch(tiny_images(40, seed=0).data.double())
    shifted = ImageBatch(real.data + 0.1)
    assert fid(first_pixels, real, real) == pytest.approx(0.0, abs=1e-8)
    assert fid(first_pixels, real, shifted) == pytest.approx(4 * 0.1**2, rel=1e-6)
    with pytest.raises(ContractError):
        fid(first_pixels, real, real.data[:0])


def test_pixel_pca_embedder() -> None:
    """PCA is fitted once and reused; small reference sets cap the dimension."""
    real = tiny_images(24, seed=0)
    embedder = PixelPCAEmbedder(4)
    with pytest.raises(ContractError):
        embedder(real)
    embedder.fit(real)
    assert embedder(tiny_images(6, seed=1)).shape == (6, 4)
    assert fid(embedder, real, real) == pytest.approx(0.0, abs=1e-6)
    assert PixelPCAEmbedder(16).fit(tiny_images(5))(real).shape == (24, 5)


def test_encoder_embedder(tiny_net) -> None:
    """Pooled float64 features of a truncated encoder; the encoder mode is restored."""
    encoder = truncate(tiny_net, "mid.0.1@4", 3)
    encoder.train()
    images = tiny_images(5)
    embedded = EncoderEmbedder(encoder, batch_size=2)(images)
    assert embedded.dtype == np.float64 and embedded.shape == (5, 16)
    assert encoder.training
    encoder.eval()
    with torch.no_grad():
        expected = encoder(images.data).double().numpy()
    assert np.allclose(embedded, expected, atol=1e-6)


if __name__ == "__main__":
    pytest.main()
