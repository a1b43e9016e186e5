"""
Optimizer and learning-rate schedule factories shared by pre-training and probing.

Functions:
    - make_optimizer(params, learning_rate, weight_decay=0.0) -> torch.optim.Adam
    - lr_factor(step, total_steps, schedule, warmup_steps=0) -> float
    - make_lr_scheduler(optimizer, schedule, total_steps, warmup_steps=0) -> LambdaLR
"""

import math
from typing import Iterable

import torch
from torch.optim.lr_scheduler import LambdaLR

from ..config.defaults import DEFAULT_LR_SCHEDULE_LIST
from ..exceptions import DDAEConfigError


def make_optimizer(
    params: Iterable[torch.nn.Parameter], learning_rate: float, weight_decay: float = 0.0
) -> torch.optim.Adam:
    """Adam with default moments."""
    return torch.optim.Adam(params, lr=learning_rate, weight_decay=weight_decay)


def lr_factor(step: int, total_steps: int, schedule: str, warmup_steps: int = 0) -> float:
    """
    Multiplier of the base learning rate at a given optimizer step.

    Linear warm-up over `warmup_steps`, then constant or cosine decay to zero at `total_steps`.
    """
    if schedule not in DEFAULT_LR_SCHEDULE_LIST:
        raise DDAEConfigError(f"Unknown lr_schedule {schedule!r}")
    if warmup_steps and step < warmup_steps:
        return (step + 1) / warmup_steps
    if schedule == "constant":
        return 1.0
    span = max(total_steps - warmup_steps, 1)
    progress = min(max(step - warmup_steps, 0) / span, 1.0)
    return 0.5 * (1.0 + math.cos(math.pi * progress))


def make_lr_scheduler(
    optimizer: torch.optim.Optimizer, schedule: str, total_steps: int, warmup_steps: int = 0
) -> LambdaLR:
    """Per-step scheduler; call `step()` after every optimizer step."""
    return LambdaLR(
        optimizer, lambda step: lr_factor(step, total_steps, schedule, warmup_steps)
    )
