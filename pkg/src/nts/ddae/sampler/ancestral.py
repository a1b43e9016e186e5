"""
Ancestral sampling.

The reverse chain starts from x_T ~ N(0, sigma_T^2 I) (unit variance for VP) and applies
x_{t-1} = mu(x_t, t) + Sigma_t z for t = T .. 1 with no noise on the final step. With a
`GuidanceSpec` the mean is shifted toward a target class by the gradient of a noise-conditional
classifier. Pixel values are clamped to [-1, 1] only after the last step.

Classes:
    - GuidanceSpec: Classifier, target label and scale of classifier guidance.

Functions:
    - guidance_gradient(guidance, x_t, t) -> torch.Tensor
    - ancestral_step(net, x_t, t, sched, generator, guidance=None, allow_ve=False) -> torch.Tensor
    - sample(net, sched, n, generator, guidance=None, ...) -> ImageBatch
    - save_samples(samples, out_dir, stem="samples") -> tuple[Path, Path]
"""

from dataclasses import dataclass
from logging import Logger, getLogger
from pathlib import Path
from typing import Callable, Optional, Union

import torch
from torch import nn
from torchvision.utils import save_image
from tqdm import tqdm

from ..backbone import save_container
from ..config.defaults import DEFAULT_GUIDANCE_SCALING, DEFAULT_GUIDANCE_SCALING_LIST
from ..corruption import ImageBatch, NoiseSchedule, ScheduleKind, vp_posterior_mean_from_eps
from ..exceptions import ContractError, DDAEConfigError, NumericalError

LogProbFn = Callable[[torch.Tensor, torch.Tensor], torch.Tensor]


@dataclass(frozen=True)
class GuidanceSpec:
    """
    Classifier guidance settings.

    Attributes:
        classifier (LogProbFn): Maps (x_t [N, C, S, S], t [N]) to log p_t(y | x_t) [N, classes];
            must be differentiable w.r.t. x_t. `NoiseConditionalClassifier.log_prob` fits.
        target_label (int): Class the samples are pushed toward.
        scale (float): s >= 0; 0 reproduces unguided sampling exactly.
        scaling (str): "variance" adds s * Sigma_t^2 * grad to the mean, "std" adds
            s * Sigma_t * grad.
    """

    classifier: LogProbFn
    target_label: int
    scale: float
    scaling: str = DEFAULT_GUIDANCE_SCALING

    def __post_init__(self) -> None:
        if self.scale < 0:
            raise DDAEConfigError(f"Guidance scale must be >= 0, got {self.scale}")
        if self.target_label < 0:
            raise DDAEConfigError(f"target_label must be >= 0, got {self.target_label}")
        if self.scaling not in DEFAULT_GUIDANCE_SCALING_LIST:
            raise DDAEConfigError(
                f"Guidance scaling must be one of {DEFAULT_GUIDANCE_SCALING_LIST}, "
                f"got {self.scaling!r}"
            )


def guidance_gradient(guidance: GuidanceSpec, x_t: torch.Tensor, t: torch.Tensor) -> torch.Tensor:
    """
    Gradient of log p_t(target | x_t) w.r.t. x_t, per item.

    The classifier parameters are not updated; only x_t is differentiated.
    """
    with torch.enable_grad():
        x = x_t.detach().requires_grad_(True)
        log_prob = guidance.classifier(x, t)
        if guidance.target_label >= log_prob.shape[1]:
            raise ContractError(
                f"target_label {guidance.target_label} outside {log_prob.shape[1]} classes"
            )
        selected = log_prob[:, guidance.target_label].sum()
        (grad,) = torch.autograd.grad(selected, x)
    return grad.detach()


# pylint: disable=too-many-arguments, too-many-positional-arguments
@torch.no_grad()
def ancestral_step(
    net: nn.Module,
    x_t: torch.Tensor,
    t: int,
    sched: NoiseSchedule,
    generator: torch.Generator,
    guidance: Optional[GuidanceSpec] = None,
    allow_ve: bool = False,
) -> torch.Tensor:
    """
    One reverse step x_t -> x_{t-1}.

    Args:
        net (nn.Module): Noise predictor eps(x_t, t).
        x_t (torch.Tensor): Current state [N, C, S, S].
        t (int): Current level in [1, T].
        sched (NoiseSchedule): VP schedule (VE only with `allow_ve`).
        generator (torch.Generator): CPU stream for the injected noise.
        guidance (Optional[GuidanceSpec]): Classifier guidance.
        allow_ve (bool): Enable the VE variant mu = x_t - (Sigma_t^2 / sigma_t) eps.

    Returns:
        torch.Tensor: x_{t-1}. Step t = 1 adds no noise.

    Raises:
        ContractError: Level out of range or VE schedule without `allow_ve`.
        NumericalError: Non-finite state; diagnostics carry the level.
    """
    t = sched.check_level(t)
    if sched.kind is ScheduleKind.VE and not allow_ve:
        raise ContractError("Ancestral sampling of a VE schedule requires allow_ve=True")
    levels = sched.levels_tensor(t, x_t.shape[0], x_t.device)
    eps = net(x_t, levels)
    variance = sched.coefficient("posterior_var", levels, x_t)
    if sched.kind is ScheduleKind.VP:
        mean = vp_posterior_mean_from_eps(x_t, eps, levels, sched)
    else:
        sigma = sched.coefficient("sigma", levels, x_t)
        mean = x_t - variance / sigma * eps
    if guidance is not None and guidance.scale != 0:
        grad = guidance_gradient(guidance, x_t, levels)
        factor = variance if guidance.scaling == "variance" else torch.sqrt(variance)
        mean = mean + guidance.scale * factor * grad
    if t > 1:
        z = torch.randn(x_t.shape, generator=generator, dtype=x_t.dtype).to(x_t.device)
        out = mean + torch.sqrt(variance) * z
    else:
        out = mean
    if not bool(torch.isfinite(out).all()):
        raise NumericalError(f"Non-finite sampler state at level {t}", {"step": t})
    return out


# pylint: disable=too-many-arguments, too-many-positional-arguments
def sample(
    net: nn.Module,
    sched: NoiseSchedule,
    n: int,
    generator: torch.Generator,
    guidance: Optional[GuidanceSpec] = None,
    allow_ve: bool = False,
    image_shape: Optional[tuple[int, int, int]] = None,
    progress: bool = False,
    logger: Optional[Logger] = None,
) -> ImageBatch:
    """
    Draw `n` images with the full reverse chain.

    Args:
        net (nn.Module): Trained noise predictor (a DDAENetwork, or any module with the same
            call signature when `image_shape` is given).
        sched (NoiseSchedule): Corruption schedule.
        n (int): Number of images.
        generator (torch.Generator): CPU stream for x_T and every injected noise.
        guidance (Optional[GuidanceSpec]): Classifier guidance; samples are labelled with the
            target class when set.
        allow_ve (bool): See `ancestral_step`.
        image_shape (Optional[tuple[int, int, int]]): (C, S, S), read from `net.config` when None.
        progress (bool): Show a tqdm bar over levels.
        logger (Optional[Logger]): Logger, module logger when None.

    Returns:
        ImageBatch: Images clamped to [-1, 1].
    """
    logger = logger if isinstance(logger, Logger) else getLogger(__name__)
    if n < 1:
        raise ContractError(f"Number of samples must be >= 1, got {n}")
    if image_shape is None:
        config = getattr(net, "config")
        image_shape = (config.in_channels, config.image_size, config.image_size)
    param = next(net.parameters(), None)
    device = param.device if param is not None else torch.device("cpu")
    dtype = param.dtype if param is not None else torch.float32
    was_training = net.training
    net.eval()
    x = torch.randn((n,) + tuple(image_shape), generator=generator, dtype=dtype)
    x = (x * float(sched.sigma[-1]) if sched.kind is ScheduleKind.VE else x).to(device)
    logger.info("Sampling %d images over %d levels", n, sched.levels)
    for t in tqdm(range(sched.levels, 0, -1), disable=not progress, leave=False):
        x = ancestral_step(net, x, t, sched, generator, guidance, allow_ve)
    net.train(was_training)
    labels = None
    if guidance is not None:
        labels = torch.full((n,), guidance.target_label, dtype=torch.int64)
    return ImageBatch(x.clamp(-1.0, 1.0).cpu(), labels, None)


def save_samples(
    samples: ImageBatch,
    out_dir: Union[str, Path],
    stem: str = "samples",
    nrow: int = 8,
    logger: Optional[Logger] = None,
) -> tuple[Path, Path]:
    """
    Write samples as a PNG grid and as a container array ``images`` (labels as ``labels``).

    Returns:
        tuple[Path, Path]: PNG and container paths.
    """
    logger = logger if isinstance(logger, Logger) else getLogger(__name__)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    png, container = out / f"{stem}.png", out / f"{stem}.ddae"
    save_image((samples.data.float() + 1.0) / 2.0, png, nrow=nrow)
    arrays = {"images": samples.data.float()}
    if samples.labels is not None:
        arrays["labels"] = samples.labels
    save_container(container, arrays, {"count": str(len(samples))}, logger)
    logger.info("Saved %d samples to %s and %s", len(samples), png, container)
    return png, container
