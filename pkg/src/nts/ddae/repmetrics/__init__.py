"""
Label-free representation diagnostics, Frechet distance and the noise-conditional classifier.

Classes:
    - GaussianSummary, PixelPCAEmbedder, EncoderEmbedder
    - ClassifierHead, NoiseConditionalClassifier, NoiseSweep

Functions:
    - alignment, uniformity, alignment_from_features, uniformity_from_features,
      normalize_features, monitor_checkpoints
    - gaussian_summary, frechet_distance, fid
    - train_noise_cond_classifier, classify_noised, accuracy_vs_noise, guidance_report
"""

from .hypersphere import (
    alignment,
    alignment_from_features,
    monitor_checkpoints,
    normalize_features,
    uniformity,
    uniformity_from_features,
)
from .frechet import (
    EncoderEmbedder,
    GaussianSummary,
    PixelPCAEmbedder,
    fid,
    frechet_distance,
    gaussian_summary,
)
from .classifier import (
    ClassifierHead,
    NoiseConditionalClassifier,
    NoiseSweep,
    accuracy_vs_noise,
    classify_noised,
    guidance_report,
    train_noise_cond_classifier,
)

__all__ = [
    "alignment",
    "alignment_from_features",
    "monitor_checkpoints",
    "normalize_features",
    "uniformity",
    "uniformity_from_features",
    "EncoderEmbedder",
    "GaussianSummary",
    "PixelPCAEmbedder",
    "fid",
    "frechet_distance",
    "gaussian_summary",
    "ClassifierHead",
    "NoiseConditionalClassifier",
    "NoiseSweep",
    "accuracy_vs_noise",
    "classify_noised",
    "guidance_report",
    "train_noise_cond_classifier",
]
