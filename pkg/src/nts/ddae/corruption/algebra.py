"""
Corruption algebra.

Stateless operations on top of a `NoiseSchedule`: forward noising, signal-to-noise ratio, the
conversions between noise prediction and denoiser output, the two regression losses and the
closed-form VP posterior mean. All functions leave their inputs untouched and are safe to call
from several threads at once.

Functions:
    - noise(x0, t, eps, sched) -> torch.Tensor: x_t = alpha_t x0 + sigma_t eps.
    - snr(sched, t): alpha_t^2 / sigma_t^2.
    - denoiser_from_eps(x_t, eps_pred, t, sched) -> torch.Tensor: (x_t - sigma_t eps) / alpha_t.
    - eps_from_denoiser(x_t, x0_hat, t, sched) -> torch.Tensor: (x_t - alpha_t x0) / sigma_t.
    - denoise_loss(x0_hat, x0) -> torch.Tensor: mean squared error on images.
    - eps_loss(eps_pred, eps) -> torch.Tensor: mean squared error on noise.
    - vp_posterior_mean_from_eps(x_t, eps_pred, t, sched) -> torch.Tensor: sampler mean.
    - q_posterior_mean(x0, x_t, t, sched) -> torch.Tensor: mean of q(x_{t-1} | x_t, x0).
"""

from typing import Union

import torch
import torch.nn.functional as F

from .images import ImageBatch, as_tensor
from .schedule import NoiseSchedule, ScheduleKind
from ..exceptions import ContractError, NumericalError

# Smallest signal coefficient accepted when converting a noise prediction to a denoiser output.
MIN_ALPHA: float = 1e-12

Levels = Union[int, torch.Tensor]


def _check_same_shape(a: torch.Tensor, b: torch.Tensor, what: str) -> None:
    if a.shape != b.shape:
        raise ContractError(f"{what}: shape mismatch {tuple(a.shape)} vs {tuple(b.shape)}")


def noise(
    x0: Union[ImageBatch, torch.Tensor],
    t: Levels,
    eps: torch.Tensor,
    sched: NoiseSchedule,
) -> torch.Tensor:
    """
    Corrupt clean images: x_t = alpha_t * x0 + sigma_t * eps.

    Args:
        x0 (Union[ImageBatch, torch.Tensor]): Clean images [N, ...].
        t (Union[int, torch.Tensor]): 1-based level, shared or one per item.
        eps (torch.Tensor): Noise with the shape of x0.
        sched (NoiseSchedule): Corruption schedule.

    Returns:
        torch.Tensor: Noised images (a new tensor).

    Raises:
        ContractError: Shape mismatch or level outside [1, T].
    """
    x0 = as_tensor(x0)
    _check_same_shape(x0, eps, "noise")
    levels = sched.levels_tensor(t, x0.shape[0], x0.device)
    alpha = sched.coefficient("alpha", levels, x0)
    sigma = sched.coefficient("sigma", levels, x0)
    return alpha * x0 + sigma * eps


def snr(sched: NoiseSchedule, t: Levels) -> Union[float, torch.Tensor]:
    """
    Signal-to-noise ratio alpha_t^2 / sigma_t^2.

    Args:
        sched (NoiseSchedule): Corruption schedule.
        t (Union[int, torch.Tensor]): Level(s), 1-based.

    Returns:
        Union[float, torch.Tensor]: A float for a single integer level, float64 tensor otherwise.
    """
    if isinstance(t, torch.Tensor):
        levels = sched.levels_tensor(t, t.numel())
        alpha = sched.alpha.double()[levels - 1]
        sigma = sched.sigma.double()[levels - 1]
        return alpha**2 / sigma**2
    level = sched.check_level(t)
    alpha = float(sched.alpha[level - 1])
    sigma = float(sched.sigma[level - 1])
    return alpha**2 / sigma**2


def denoiser_from_eps(
    x_t: torch.Tensor, eps_pred: torch.Tensor, t: Levels, sched: NoiseSchedule
) -> torch.Tensor:
    """
    Convert a noise prediction into an estimate of the clean image.

    D(x_t, t) = (x_t - sigma_t * eps_pred) / alpha_t

    Raises:
        ContractError: Shape mismatch or level outside [1, T].
        NumericalError: alpha_t below 1e-12 (level too deep for this conversion).
    """
    _check_same_shape(x_t, eps_pred, "denoiser_from_eps")
    levels = sched.levels_tensor(t, x_t.shape[0], x_t.device)
    alpha = sched.coefficient("alpha", levels, x_t)
    if sched.kind is ScheduleKind.VP and bool((alpha < MIN_ALPHA).any()):
        raise NumericalError(
            "Signal coefficient below 1e-12, cannot recover x0 at this level",
            {"max_level": int(levels.max()), "min_alpha": float(alpha.min())},
        )
    sigma = sched.coefficient("sigma", levels, x_t)
    return (x_t - sigma * eps_pred) / alpha


def eps_from_denoiser(
    x_t: torch.Tensor, x0_hat: torch.Tensor, t: Levels, sched: NoiseSchedule
) -> torch.Tensor:
    """Inverse conversion: eps = (x_t - alpha_t * x0_hat) / sigma_t."""
    _check_same_shape(x_t, x0_hat, "eps_from_denoiser")
    levels = sched.levels_tensor(t, x_t.shape[0], x_t.device)
    alpha = sched.coefficient("alpha", levels, x_t)
    sigma = sched.coefficient("sigma", levels, x_t)
    return (x_t - alpha * x0_hat) / sigma


def denoise_loss(x0_hat: torch.Tensor, x0: torch.Tensor) -> torch.Tensor:
    """Mean squared error between a denoiser output and the clean images."""
    _check_same_shape(x0_hat, x0, "denoise_loss")
    return F.mse_loss(x0_hat, x0)


def eps_loss(eps_pred: torch.Tensor, eps: torch.Tensor) -> torch.Tensor:
    """Mean squared error between predicted and true noise."""
    _check_same_shape(eps_pred, eps, "eps_loss")
    return F.mse_loss(eps_pred, eps)


def vp_posterior_mean_from_eps(
    x_t: torch.Tensor, eps_pred: torch.Tensor, t: Levels, sched: NoiseSchedule
) -> torch.Tensor:
    """
    Mean of p(x_{t-1} | x_t) for a VP schedule, from a noise prediction.

    mu = (x_t - beta_t / sigma_t * eps_pred) / sqrt(1 - beta_t)
    """
    if sched.kind is not ScheduleKind.VP:
        raise ContractError("vp_posterior_mean_from_eps requires a VP schedule")
    _check_same_shape(x_t, eps_pred, "vp_posterior_mean_from_eps")
    levels = sched.levels_tensor(t, x_t.shape[0], x_t.device)
    beta = sched.coefficient("beta", levels, x_t)
    sigma = sched.coefficient("sigma", levels, x_t)
    return (x_t - beta / sigma * eps_pred) / torch.sqrt(1.0 - beta)


def q_posterior_mean(
    x0: torch.Tensor, x_t: torch.Tensor, t: Levels, sched: NoiseSchedule
) -> torch.Tensor:
    """
    Closed-form mean of q(x_{t-1} | x_t, x0) for a VP schedule.

    mu = alpha_{t-1} beta_t / sigma_t^2 * x0 + sqrt(1 - beta_t) sigma_{t-1}^2 / sigma_t^2 * x_t,
    with alpha_0 = 1 and sigma_0 = 0.
    """
    if sched.kind is not ScheduleKind.VP:
        raise ContractError("q_posterior_mean requires a VP schedule")
    _check_same_shape(x0, x_t, "q_posterior_mean")
    levels = sched.levels_tensor(t, x_t.shape[0], x_t.device)
    alpha_prev = torch.cat([torch.ones(1, dtype=torch.float64), sched.alpha.double()])
    sigma_prev = torch.cat([torch.zeros(1, dtype=torch.float64), sched.sigma.double()])
    beta = sched.beta.double()[levels.cpu() - 1]
    sigma_sq = sched.sigma.double()[levels.cpu() - 1] ** 2
    coef_x0 = alpha_prev[levels.cpu() - 1] * beta / sigma_sq
    coef_xt = torch.sqrt(1.0 - beta) * sigma_prev[levels.cpu() - 1] ** 2 / sigma_sq
    shape = (-1,) + (1,) * (x_t.dim() - 1)
    coef_x0 = coef_x0.to(x_t.device, x_t.dtype).view(shape)
    coef_xt = coef_xt.to(x_t.device, x_t.dtype).view(shape)
    return coef_x0 * x0 + coef_xt * x_t
