"""
Ancestral sampling with optional classifier guidance.

Classes:
    - GuidanceSpec

Functions:
    - ancestral_step, sample, guidance_gradient, save_samples
"""

from .ancestral import GuidanceSpec, ancestral_step, guidance_gradient, sample, save_samples

__all__ = ["GuidanceSpec", "ancestral_step", "guidance_gradient", "sample", "save_samples"]
