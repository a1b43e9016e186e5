"""
DDAE configuration package.

Validated configuration models for every phase of a run, their defaults and named presets.

Raises:
    DDAEConfigError: If invalid configuration parameters are detected.

Classes:
    - ConfigModel: Abstract base (to_dict, from_dict, canonical JSON, digest).
    - ScheduleConfig: Noise schedule parameters.
    - DDAEConfig: UNet backbone shape.
    - TrainOpts: Pre-training options.
    - ProbeOpts: Probing and fine-tuning options.
    - MetricOpts: Representation metric options.
    - RunConfig: Complete run description.

Functions:
    - resolve_run_config: Merge defaults, presets, a config file and command line overrides.
"""

# Exceptions
from ..exceptions import DDAEConfigError

# Abstract base class
from .config_interface import ConfigModel

# Concrete implementations
from .config_implementation import (
    ScheduleConfig,
    DDAEConfig,
    TrainOpts,
    ProbeOpts,
    MetricOpts,
    RunConfig,
)

# Presets
from .presets import PRESETS, PRESET_EXPECTATIONS, deep_merge, preset_names, resolve_run_config
