"""
Noise schedules.

A schedule fixes the corruption law q(x_t | x_0) = N(alpha_t x_0, sigma_t^2 I) for every level
t = 1..T, together with the variance used by the ancestral sampler. Two parameterizations are
supported:

- VP (variance preserving): linear rates beta_t from beta_min to beta_max,
  alpha_t = sqrt(prod_{i<=t} (1 - beta_i)) and alpha_t^2 + sigma_t^2 = 1.
- VE (variance exploding): alpha_t = 1 and sigma_t log-uniformly spaced from sigma_min to
  sigma_max.

Levels are 1-based in every public function (t in [1, T]); the arrays stored on a schedule are
0-based, entry ``t - 1`` belongs to level ``t``.

Coefficient arrays are built and stored in float64 and cast to the dtype of the batch they are
applied to, so network math stays in 32-bit reals while the long VP product keeps its digits.

Classes:
    - ScheduleKind: VP / VE enumeration.
    - NoiseSchedule: Immutable per-level coefficient arrays.

Functions:
    - make_vp_schedule(levels, beta_min, beta_max, posterior_variance="beta") -> NoiseSchedule
    - make_ve_schedule(levels, sigma_min, sigma_max) -> NoiseSchedule
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

import numpy as np
import torch

from ..config.validation import (
    validate_positive_int,
    validate_beta_range,
    validate_sigma_range,
    validate_choice,
)
from ..config.defaults import DEFAULT_POSTERIOR_VARIANCE, DEFAULT_POSTERIOR_VARIANCE_LIST
from ..exceptions import ContractError, DDAEConfigError


class ScheduleKind(str, Enum):
    """Corruption parameterization."""

    VP = "VP"
    VE = "VE"


@dataclass(frozen=True, eq=False)
class NoiseSchedule:
    """
    Per-level corruption coefficients.

    Attributes:
        kind (ScheduleKind): VP or VE.
        levels (int): Number of noise levels T.
        beta (Optional[torch.Tensor]): Per-level rates, float64 [T] (VP only).
        alpha (torch.Tensor): Signal coefficients alpha_t, float64 [T].
        sigma (torch.Tensor): Noise scales sigma_t, float64 [T].
        posterior_var (torch.Tensor): Ancestral sampling variance Sigma_t^2, float64 [T].
            VP: beta_t (or the tilde-beta variant); VE: sigma_t^2 - sigma_{t-1}^2.
    """

    kind: ScheduleKind
    levels: int
    beta: Optional[torch.Tensor]
    alpha: torch.Tensor
    sigma: torch.Tensor
    posterior_var: torch.Tensor

    @property
    def T(self) -> int:  # pylint: disable=invalid-name
        """Number of noise levels."""
        return self.levels

    def check_level(self, t: int) -> int:
        """
        Validate a single 1-based level.

        Raises:
            ContractError: If t is not an integer in [1, T].
        """
        if isinstance(t, torch.Tensor):
            if t.numel() != 1:
                raise ContractError("Expected a single level")
            t = int(t.item())
        if isinstance(t, bool) or not isinstance(t, (int, np.integer)):
            raise ContractError(f"Level must be an integer, got {type(t)}")
        if not 1 <= t <= self.levels:
            raise ContractError(f"Level {t} outside [1, {self.levels}]")
        return int(t)

    def levels_tensor(
        self, t: Union[int, torch.Tensor], batch: int, device: Optional[torch.device] = None
    ) -> torch.Tensor:
        """
        Normalize levels to a validated int64 tensor of shape [batch].

        Args:
            t (Union[int, torch.Tensor]): One level for every item, or one level per item.
            batch (int): Batch size.
            device (Optional[torch.device]): Target device.

        Raises:
            ContractError: Shape mismatch or level outside [1, T].
        """
        if isinstance(t, torch.Tensor):
            if t.dtype.is_floating_point or t.dtype == torch.bool:
                raise ContractError(f"Levels must be integers, got {t.dtype}")
            levels = t.to(dtype=torch.int64, device=device).reshape(-1)
            if levels.numel() == 1 and batch != 1:
                levels = levels.expand(batch)
            if levels.numel() != batch:
                raise ContractError(
                    f"Expected {batch} levels, got {levels.numel()}"
                )
        else:
            levels = torch.full((batch,), self.check_level(t), dtype=torch.int64, device=device)
        if levels.numel() and (levels.min() < 1 or levels.max() > self.levels):
            raise ContractError(
                f"Levels {int(levels.min())}..{int(levels.max())} outside [1, {self.levels}]"
            )
        return levels

    def coefficient(self, name: str, t: torch.Tensor, like: torch.Tensor) -> torch.Tensor:
        """
        Gather a coefficient array at 1-based levels, shaped to broadcast against `like`.

        Args:
            name (str): One of "alpha", "sigma", "beta", "posterior_var".
            t (torch.Tensor): Validated int64 levels [N].
            like (torch.Tensor): Batch tensor [N, ...] providing dtype, device and rank.

        Returns:
            torch.Tensor: Coefficients of shape [N, 1, ..., 1].
        """
        values = getattr(self, name)
        if values is None:
            raise ContractError(f"Schedule of kind {self.kind.value} has no {name}")
        gathered = values.to(device=like.device)[t.to(like.device) - 1]
        return gathered.to(like.dtype).view(-1, *([1] * (like.dim() - 1)))

    def to_dict(self) -> dict:
        """Plain-data description (arrays as lists)."""
        return {
            "kind": self.kind.value,
            "levels": self.levels,
            "beta": None if self.beta is None else self.beta.tolist(),
            "alpha": self.alpha.tolist(),
            "sigma": self.sigma.tolist(),
            "posterior_var": self.posterior_var.tolist(),
        }

    def __repr__(self) -> str:
        return (
            f"{self.__class__.__name__}(kind={self.kind.value}, levels={self.levels}, "
            f"sigma=[{float(self.sigma[0]):.4g} .. {float(self.sigma[-1]):.4g}])"
        )


def _strictly_increasing(values: torch.Tensor) -> bool:
    return bool(torch.all(values[1:] > values[:-1]))


def make_vp_schedule(
    levels: int,
    beta_min: float,
    beta_max: float,
    posterior_variance: str = DEFAULT_POSTERIOR_VARIANCE,
) -> NoiseSchedule:
    """
    Build a variance-preserving schedule with linearly spaced rates.

    Args:
        levels (int): Number of levels T >= 1.
        beta_min (float): First rate, 0 < beta_min <= beta_max.
        beta_max (float): Last rate, beta_max < 1.
        posterior_variance (str): "beta" (Sigma_t^2 = beta_t) or "tilde"
            (Sigma_t^2 = beta_t sigma_{t-1}^2 / sigma_t^2, zero at t = 1).

    Returns:
        NoiseSchedule: VP schedule.

    Raises:
        DDAEConfigError: Invalid level count or rate bound (the message names the bound).
    """
    levels = validate_positive_int("levels", levels, None)
    beta_min, beta_max = validate_beta_range(beta_min, beta_max)
    posterior_variance = validate_choice(
        "posterior_variance", posterior_variance, DEFAULT_POSTERIOR_VARIANCE,
        DEFAULT_POSTERIOR_VARIANCE_LIST,
    )
    beta = np.linspace(beta_min, beta_max, levels, dtype=np.float64)
    log_alpha_sq = np.cumsum(np.log1p(-beta))
    alpha = np.exp(0.5 * log_alpha_sq)
    sigma_sq = -np.expm1(log_alpha_sq)
    sigma = np.sqrt(sigma_sq)
    if posterior_variance == "beta":
        posterior_var = beta.copy()
    else:
        previous = np.concatenate(([0.0], sigma_sq[:-1]))
        posterior_var = beta * previous / sigma_sq
    schedule = NoiseSchedule(
        kind=ScheduleKind.VP,
        levels=levels,
        beta=torch.from_numpy(beta),
        alpha=torch.from_numpy(alpha),
        sigma=torch.from_numpy(sigma),
        posterior_var=torch.from_numpy(posterior_var),
    )
    if not (_strictly_increasing(schedule.sigma) and _strictly_increasing(-schedule.alpha)):
        raise DDAEConfigError(
            f"VP schedule with levels={levels}, beta range [{beta_min}, {beta_max}] is not "
            "strictly monotone"
        )
    return schedule


def make_ve_schedule(levels: int, sigma_min: float, sigma_max: float) -> NoiseSchedule:
    """
    Build a variance-exploding schedule with log-uniformly spaced noise scales.

    Args:
        levels (int): Number of levels T >= 1.
        sigma_min (float): Smallest noise scale, > 0.
        sigma_max (float): Largest noise scale, > sigma_min.

    Returns:
        NoiseSchedule: VE schedule; Sigma_t^2 = sigma_t^2 - sigma_{t-1}^2 with sigma_0 = 0.

    Raises:
        DDAEConfigError: Invalid level count or scale bound.
    """
    levels = validate_positive_int("levels", levels, None)
    sigma_min, sigma_max = validate_sigma_range(sigma_min, sigma_max)
    sigma = np.geomspace(sigma_min, sigma_max, levels, dtype=np.float64)
    sigma_sq = sigma**2
    posterior_var = sigma_sq - np.concatenate(([0.0], sigma_sq[:-1]))
    schedule = NoiseSchedule(
        kind=ScheduleKind.VE,
        levels=levels,
        beta=None,
        alpha=torch.ones(levels, dtype=torch.float64),
        sigma=torch.from_numpy(sigma),
        posterior_var=torch.from_numpy(posterior_var),
    )
    if not _strictly_increasing(schedule.sigma):
        raise DDAEConfigError(
            f"VE schedule with levels={levels}, sigma range [{sigma_min}, {sigma_max}] is not "
            "strictly increasing"
        )
    return schedule
