"""
Frechet distance between Gaussian summaries of embedded image sets.

    d^2 = ||mu_1 - mu_2||^2 + Tr(S_1 + S_2 - 2 (S_1^{1/2} S_2 S_1^{1/2})^{1/2})

Matrix square roots use the symmetric eigendecomposition; eigenvalues down to -1e-6 are treated
as rounding noise and clipped to zero.

Classes:
    - GaussianSummary: float64 mean and covariance.
    - PixelPCAEmbedder: PCA of flattened pixels fitted on a reference set.
    - EncoderEmbedder: Pooled features of a truncated encoder.

Functions:
    - gaussian_summary(features) -> GaussianSummary
    - frechet_distance(a, b) -> float
    - fid(embedder_fn, real_images, generated_images) -> float
"""

from dataclasses import dataclass
from logging import Logger, getLogger
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np
import torch
from scipy import linalg
from sklearn.decomposition import PCA

from ..backbone import Encoder, load_container, save_container
from ..corruption import ImageBatch, as_tensor
from ..exceptions import ContractError, NumericalError

EIGENVALUE_TOLERANCE: float = 1e-6
SYMMETRY_TOLERANCE: float = 1e-8

Images = Union[ImageBatch, torch.Tensor]
EmbedderFn = Callable[[Images], np.ndarray]


@dataclass(frozen=True, eq=False)
class GaussianSummary:
    """
    Mean and covariance of a feature set.

    Attributes:
        mean (np.ndarray): float64 [D].
        covariance (np.ndarray): float64 [D, D], symmetric.
        count (int): Rows summarized.
    """

    mean: np.ndarray
    covariance: np.ndarray
    count: int = 0

    def __post_init__(self) -> None:
        dim = self.mean.shape[0]
        if self.mean.ndim != 1 or self.covariance.shape != (dim, dim):
            raise ContractError(
                f"Mean {self.mean.shape} and covariance {self.covariance.shape} do not match"
            )
        asymmetry = float(np.abs(self.covariance - self.covariance.T).max(initial=0.0))
        if asymmetry > SYMMETRY_TOLERANCE:
            raise NumericalError("Covariance is not symmetric", {"asymmetry": asymmetry})

    @property
    def dim(self) -> int:
        return int(self.mean.shape[0])

    def save(self, path: Union[str, Path], logger: Optional[Logger] = None) -> None:
        """Store as f64 container arrays ``mean`` / ``covariance``."""
        save_container(
            path,
            {
                "mean": torch.from_numpy(self.mean),
                "covariance": torch.from_numpy(self.covariance),
            },
            {"count": str(self.count)},
            logger,
        )

    @classmethod
    def load(cls, path: Union[str, Path]) -> "GaussianSummary":
        arrays, metadata = load_container(path)
        return cls(
            arrays["mean"].numpy(), arrays["covariance"].numpy(), int(metadata.get("count", 0))
        )


def gaussian_summary(features: Union[np.ndarray, torch.Tensor]) -> GaussianSummary:
    """
    Sample mean and (unbiased) covariance of rows.

    Raises:
        ContractError: Fewer than two rows.
    """
    if isinstance(features, torch.Tensor):
        features = features.detach().cpu().numpy()
    values = np.asarray(features, dtype=np.float64)
    if values.ndim != 2 or values.shape[0] < 2:
        raise ContractError(f"Need at least two feature rows [N, D], got {values.shape}")
    covariance = np.atleast_2d(np.cov(values, rowvar=False))
    covariance = 0.5 * (covariance + covariance.T)
    return GaussianSummary(values.mean(axis=0), covariance, values.shape[0])


def _psd_eigenvalues(matrix: np.ndarray, what: str) -> tuple[np.ndarray, np.ndarray]:
    eigenvalues, eigenvectors = linalg.eigh(matrix)
    lowest = float(eigenvalues.min(initial=0.0))
    if lowest < -EIGENVALUE_TOLERANCE:
        raise NumericalError(
            f"{what} is not positive semidefinite (min eigenvalue {lowest:.3e})",
            {"min_eigenvalue": lowest},
        )
    return np.clip(eigenvalues, 0.0, None), eigenvectors


def _sqrt_psd(matrix: np.ndarray, what: str) -> np.ndarray:
    eigenvalues, eigenvectors = _psd_eigenvalues(matrix, what)
    return (eigenvectors * np.sqrt(eigenvalues)) @ eigenvectors.T


def frechet_distance(a: GaussianSummary, b: GaussianSummary) -> float:
    """
    Squared Frechet distance between two Gaussians.

    Raises:
        ContractError: Dimension mismatch.
        NumericalError: A covariance (or the product) has an eigenvalue below -1e-6.
    """
    if a.dim != b.dim:
        raise ContractError(f"Summaries of dimension {a.dim} and {b.dim}")
    diff = a.mean - b.mean
    root_a = _sqrt_psd(a.covariance, "First covariance")
    _psd_eigenvalues(b.covariance, "Second covariance")
    product = root_a @ b.covariance @ root_a
    product = 0.5 * (product + product.T)
    eigenvalues, _ = _psd_eigenvalues(product, "Covariance product")
    trace = np.trace(a.covariance) + np.trace(b.covariance) - 2.0 * np.sqrt(eigenvalues).sum()
    return max(float(diff @ diff + trace), 0.0)


def fid(embedder_fn: EmbedderFn, real_images: Images, generated_images: Images) -> float:
    """
    Frechet distance between the embeddings of two image sets.

    Args:
        embedder_fn (EmbedderFn): Deterministic map from images to [N, D] embeddings.
        real_images (Images): Reference images.
        generated_images (Images): Images under evaluation.
    """
    if len(as_tensor(real_images)) == 0 or len(as_tensor(generated_images)) == 0:
        raise ContractError("FID needs two nonempty image sets")
    real = gaussian_summary(np.asarray(embedder_fn(real_images), dtype=np.float64))
    generated = gaussian_summary(np.asarray(embedder_fn(generated_images), dtype=np.float64))
    return frechet_distance(real, generated)


class PixelPCAEmbedder:
    """
    Principal components of flattened pixels.

    The projection is fitted once on a reference set and then applied unchanged to every image set.

    Attributes:
        components (int): Requested dimension.
    """

    def __init__(self, components: int, logger: Optional[Logger] = None) -> None:
        self.logger = logger if isinstance(logger, Logger) else getLogger(__name__)
        self.components = components
        self.__pca: Optional[PCA] = None

    def fit(self, images: Images) -> "PixelPCAEmbedder":
        """Fit the projection on reference images."""
        flat = as_tensor(images).reshape(len(as_tensor(images)), -1).double().cpu().numpy()
        components = min(self.components, flat.shape[0], flat.shape[1])
        if components < self.components:
            self.logger.warning(
                "PCA dimension reduced from %d to %d by the reference set size",
                self.components, components,
            )
        self.__pca = PCA(n_components=components, svd_solver="full", random_state=0).fit(flat)
        return self

    def __call__(self, images: Images) -> np.ndarray:
        if self.__pca is None:
            raise ContractError("PixelPCAEmbedder must be fitted before use")
        flat = as_tensor(images).reshape(len(as_tensor(images)), -1).double().cpu().numpy()
        return self.__pca.transform(flat)


class EncoderEmbedder:
    """Pooled features of an encoder, computed in eval mode without gradients."""

    def __init__(self, encoder: Encoder, batch_size: int = 256) -> None:
        self.encoder = encoder
        self.batch_size = batch_size

    @torch.no_grad()
    def __call__(self, images: Images) -> np.ndarray:
        x = as_tensor(images)
        device = self.encoder.t_input.device
        was_training = self.encoder.training
        self.encoder.eval()
        chunks = [
            self.encoder(x[start : start + self.batch_size].to(device)).double().cpu()
            for start in range(0, x.shape[0], self.batch_size)
        ]
        self.encoder.train(was_training)
        return torch.cat(chunks).numpy()
