"""
Diffusion corruption algebra.

This package provides the noise schedules and the pure, stateless operations built on them.

Classes:
    - ScheduleKind: VP / VE enumeration.
    - NoiseSchedule: Per-level alpha, sigma, beta and posterior variance arrays.
    - ImageBatch: Images scaled to [-1, 1] with optional labels.

Functions:
    - make_vp_schedule, make_ve_schedule: Schedule builders.
    - noise, snr, denoiser_from_eps, eps_from_denoiser: Corruption and conversions.
    - denoise_loss, eps_loss: Regression objectives.
    - vp_posterior_mean_from_eps, q_posterior_mean: VP reverse-step means.
"""

from .schedule import ScheduleKind, NoiseSchedule, make_vp_schedule, make_ve_schedule
from .images import ImageBatch, as_tensor
from .algebra import (
    noise,
    snr,
    denoiser_from_eps,
    eps_from_denoiser,
    denoise_loss,
    eps_loss,
    vp_posterior_mean_from_eps,
    q_posterior_mean,
)

__all__ = [
    "ScheduleKind",
    "NoiseSchedule",
    "make_vp_schedule",
    "make_ve_schedule",
    "ImageBatch",
    "as_tensor",
    "noise",
    "snr",
    "denoiser_from_eps",
    "eps_from_denoiser",
    "denoise_loss",
    "eps_loss",
    "vp_posterior_mean_from_eps",
    "q_posterior_mean",
]
