"""
Named configuration presets.

A preset is a nested partial mapping merged over the defaults of `RunConfig`. The full-scale
presets carry the published network, schedule and probing settings; `desk` keeps the small
defaults. Presets can be chained ("ddpm-cifar10,fine-tuning"): later entries override earlier ones.

Reference numbers of the full-scale models are kept apart in `PRESET_EXPECTATIONS`; they are
metadata for comparison and are never asserted at desk scale.

Constants:
    - PRESETS (dict[str, dict]): Preset name -> partial RunConfig mapping.
    - PRESET_EXPECTATIONS (dict[str, dict]): Preset name -> published reference values.

Functions:
    - deep_merge(base, update) -> dict: Recursive mapping merge.
    - preset_names(spec) -> list[str]: Split a comma separated preset list.
    - resolve_run_config(preset, data, overrides) -> RunConfig: Build the effective run config.
"""

import copy
from typing import Any, Mapping, Optional

from .config_implementation import RunConfig
from .defaults import DEFAULT_PRESET
from ..exceptions import DDAEConfigError

_PROBE_AUGMENTATIONS = ["horizontal_flip", "pad_crop"]

PRESETS: dict[str, dict[str, Any]] = {
    "desk": {},
    "ddpm-cifar10": {
        "schedule": {"kind": "VP", "levels": 1000, "beta_min": 1e-4, "beta_max": 0.02},
        "network": {
            "base_channels": 128,
            "channel_multipliers": [1, 2, 2, 2],
            "blocks_per_resolution": 2,
            "attention_resolutions": [16],
            "image_size": 32,
            "dropout": 0.1,
        },
        "train": {"epochs": 2000, "batch_size": 128, "learning_rate": 2e-4},
        "probe": {"epochs": 10},
        "timesteps": list(range(1, 1001, 5)),
        "tap": "up.1.0@16",
        "t_fixed": 11,
    },
    "edm-cifar10": {
        "schedule": {"kind": "VE", "levels": 18, "sigma_min": 0.002, "sigma_max": 80.0},
        "network": {
            "base_channels": 128,
            "channel_multipliers": [2, 2, 2],
            "blocks_per_resolution": 4,
            "attention_resolutions": [16],
            "image_size": 32,
            "dropout": 0.13,
        },
        "train": {"epochs": 4000, "batch_size": 128, "learning_rate": 1e-3},
        "probe": {"epochs": 15},
        "timesteps": list(range(1, 19)),
        "tap": "up.1.0@16",
        "t_fixed": 4,
    },
    "ddpm-tiny-imagenet": {
        "schedule": {"kind": "VP", "levels": 1000, "beta_min": 1e-4, "beta_max": 0.02},
        "network": {
            "base_channels": 128,
            "channel_multipliers": [1, 2, 2, 2],
            "blocks_per_resolution": 2,
            "attention_resolutions": [16],
            "image_size": 64,
            "dropout": 0.1,
        },
        "train": {"epochs": 2000, "batch_size": 128, "learning_rate": 2e-4},
        "probe": {"epochs": 20},
        "dataset_format": "png",
        "timesteps": list(range(1, 1001, 5)),
        "tap": "up.3.1@8",
        "t_fixed": 45,
    },
    "edm-tiny-imagenet": {
        "schedule": {"kind": "VE", "levels": 50, "sigma_min": 0.002, "sigma_max": 80.0},
        "network": {
            "base_channels": 128,
            "channel_multipliers": [1, 2, 2, 2],
            "blocks_per_resolution": 4,
            "attention_resolutions": [16],
            "image_size": 64,
            "dropout": 0.1,
        },
        "train": {"epochs": 2000, "batch_size": 128, "learning_rate": 1e-3},
        "probe": {"epochs": 30},
        "dataset_format": "png",
        "timesteps": list(range(1, 51)),
        "tap": "up.2.1@16",
        "t_fixed": 14,
    },
    "linear-probing": {
        "probe": {
            "epochs": 10,
            "batch_size": 128,
            "learning_rate": 1e-3,
            "lr_schedule": "cosine",
            "warmup_epochs": 0,
            "augmentations": _PROBE_AUGMENTATIONS,
        },
    },
    "fine-tuning": {
        "probe": {
            "epochs": 30,
            "batch_size": 128,
            "learning_rate": 1e-3,
            "lr_schedule": "cosine",
            "warmup_epochs": 0,
            "augmentations": _PROBE_AUGMENTATIONS,
        },
    },
    "from-scratch": {
        "probe": {
            "epochs": 200,
            "batch_size": 128,
            "learning_rate": 5e-4,
            "lr_schedule": "cosine",
            "warmup_epochs": 5,
            "augmentations": _PROBE_AUGMENTATIONS,
        },
    },
}

PRESET_EXPECTATIONS: dict[str, dict[str, Any]] = {
    "ddpm-cifar10": {
        "parameters_millions": 35.7,
        "tap_label": "7/12 (1st block@16)",
        "finetune_epochs": 30,
    },
    "edm-cifar10": {
        "parameters_millions": 55.7,
        "tap_label": "6/15 (1st block@16)",
        "fid": 2.0,
        "linear_accuracy": 0.959,
        "finetune_accuracy": 0.972,
        "finetune_epochs": 50,
    },
    "ddpm-tiny-imagenet": {
        "parameters_millions": 35.7,
        "tap_label": "2/12 (2nd block@8)",
        "finetune_epochs": 80,
    },
    "edm-tiny-imagenet": {
        "parameters_millions": 61.8,
        "tap_label": "7/20 (2nd block@16)",
        "finetune_epochs": 100,
    },
}


def deep_merge(base: Mapping[str, Any], update: Mapping[str, Any]) -> dict[str, Any]:
    """
    Merge `update` into a copy of `base`; nested mappings merge, other values replace.

    Returns:
        dict: The merged mapping (inputs are left untouched).
    """
    merged = copy.deepcopy(dict(base))
    for key, value in update.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def preset_names(spec: Optional[str]) -> list[str]:
    """
    Split a comma separated preset list and check every name.

    Raises:
        DDAEConfigError: Unknown preset.
    """
    if spec is None or not spec.strip():
        return [DEFAULT_PRESET]
    names = [name.strip() for name in spec.split(",") if name.strip()]
    for name in names:
        if name not in PRESETS:
            raise DDAEConfigError(f"Unknown preset {name!r}, expected one of {sorted(PRESETS)}")
    return names


def resolve_run_config(
    preset: Optional[str] = None,
    data: Optional[Mapping[str, Any]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> RunConfig:
    """
    Build the effective run configuration.

    Precedence, lowest first: defaults, presets (in the given order), the `preset` named inside
    `data` when no explicit preset is given, `data` (a config file), `overrides` (command line).

    Args:
        preset (Optional[str]): Comma separated preset names.
        data (Optional[Mapping[str, Any]]): Parsed configuration file.
        overrides (Optional[Mapping[str, Any]]): Values from command line flags (None skipped).

    Returns:
        RunConfig: Validated configuration.
    """
    data = dict(data or {})
    if preset is None and isinstance(data.get("preset"), str):
        preset = data["preset"]
    names = preset_names(preset)
    merged: dict[str, Any] = {}
    for name in names:
        merged = deep_merge(merged, PRESETS[name])
    merged = deep_merge(merged, {k: v for k, v in data.items() if k != "preset"})
    if overrides:
        merged = deep_merge(merged, {k: v for k, v in overrides.items() if v is not None})
    merged["preset"] = ",".join(names)
    return RunConfig.from_dict(merged)
