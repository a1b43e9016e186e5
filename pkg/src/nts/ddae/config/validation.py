"""
DDAE configuration validation routines.

This module provides the functions used by the configuration classes to validate every value
assigned to them. Each function returns the validated (and normalized) value, substitutes the
supplied default when the value is None, and raises `DDAEConfigError` naming the offending field
otherwise.

Functions:
    - validate_positive_int(name, value, default): Strictly positive integer.
    - validate_non_negative_int(name, value, default): Integer >= 0.
    - validate_optional_positive_int(name, value): Strictly positive integer or None.
    - validate_positive_float(name, value, default): Strictly positive finite number.
    - validate_fraction(name, value, default, inclusive): Number in (0, 1) or [0, 1].
    - validate_optional_fraction(name, value): Number in (0, 1) or None.
    - validate_choice(name, value, default, choices): One of the allowed strings.
    - validate_choice_set(name, value, default, choices): Sorted tuple of allowed strings.
    - validate_int_tuple(name, value, default, allow_empty): Tuple of positive integers.
    - validate_bool(name, value, default): Boolean flag.
    - validate_seed(value, default): Non-negative integer seed.
    - validate_beta_range(beta_min, beta_max): VP rate bounds.
    - validate_sigma_range(sigma_min, sigma_max): VE scale bounds.

Raises:
    DDAEConfigError: If any of the parameters fail validation.
"""

import math
import numbers
from typing import Any, Iterable, Optional, Sequence, Union

from ..exceptions import DDAEConfigError


def _is_int(value: Any) -> bool:
    return isinstance(value, numbers.Integral) and not isinstance(value, bool)


def _is_number(value: Any) -> bool:
    return isinstance(value, numbers.Real) and not isinstance(value, bool)


def validate_positive_int(name: str, value: Optional[int], default: Optional[int]) -> int:
    """
    Validate a strictly positive integer.

    Args:
        name (str): Field name used in error messages.
        value (Optional[int]): Value to validate.
        default (Optional[int]): Returned when value is None.

    Returns:
        int: Validated value.
    """
    if value is None:
        if default is None:
            raise DDAEConfigError(f"{name} is required")
        return default
    if not _is_int(value):
        raise DDAEConfigError(f"{name} must be an integer, got {type(value)}")
    if value < 1:
        raise DDAEConfigError(f"{name} must be positive, got {value}")
    return int(value)


def validate_non_negative_int(name: str, value: Optional[int], default: int) -> int:
    """
    Validate an integer greater than or equal to zero.

    Args:
        name (str): Field name used in error messages.
        value (Optional[int]): Value to validate.
        default (int): Returned when value is None.

    Returns:
        int: Validated value.
    """
    if value is None:
        return default
    if not _is_int(value):
        raise DDAEConfigError(f"{name} must be an integer, got {type(value)}")
    if value < 0:
        raise DDAEConfigError(f"{name} must not be negative, got {value}")
    return int(value)


def validate_optional_positive_int(name: str, value: Optional[int]) -> Optional[int]:
    """Validate a strictly positive integer, None disables the option."""
    if value is None:
        return None
    return validate_positive_int(name, value, None)


def validate_positive_float(
    name: str, value: Optional[Union[int, float]], default: Optional[float]
) -> float:
    """
    Validate a strictly positive finite number.

    Args:
        name (str): Field name used in error messages.
        value (Optional[Union[int, float]]): Value to validate.
        default (Optional[float]): Returned when value is None.

    Returns:
        float: Validated value.
    """
    if value is None:
        if default is None:
            raise DDAEConfigError(f"{name} is required")
        return default
    if not _is_number(value):
        raise DDAEConfigError(f"{name} must be a number, got {type(value)}")
    if not math.isfinite(value) or value <= 0:
        raise DDAEConfigError(f"{name} must be positive and finite, got {value}")
    return float(value)


def validate_non_negative_float(
    name: str, value: Optional[Union[int, float]], default: float
) -> float:
    """Validate a finite number greater than or equal to zero."""
    if value is None:
        return default
    if not _is_number(value):
        raise DDAEConfigError(f"{name} must be a number, got {type(value)}")
    if not math.isfinite(value) or value < 0:
        raise DDAEConfigError(f"{name} must not be negative, got {value}")
    return float(value)


def validate_fraction(
    name: str,
    value: Optional[Union[int, float]],
    default: float,
    inclusive: bool = False,
) -> float:
    """
    Validate a number inside the unit interval.

    Args:
        name (str): Field name used in error messages.
        value (Optional[Union[int, float]]): Value to validate.
        default (float): Returned when value is None.
        inclusive (bool): Accept the interval end points 0 and 1.

    Returns:
        float: Validated value.
    """
    if value is None:
        return default
    if not _is_number(value):
        raise DDAEConfigError(f"{name} must be a number, got {type(value)}")
    if inclusive:
        if not 0.0 <= value <= 1.0:
            raise DDAEConfigError(f"{name} must lie in [0, 1], got {value}")
    elif not 0.0 < value < 1.0:
        raise DDAEConfigError(f"{name} must lie in (0, 1), got {value}")
    return float(value)


def validate_optional_fraction(name: str, value: Optional[float]) -> Optional[float]:
    """Validate a number in (0, 1), None disables the option."""
    if value is None:
        return None
    return validate_fraction(name, value, 0.0)


def validate_choice(name: str, value: Optional[str], default: str, choices: Sequence[str]) -> str:
    """
    Validate a value against a list of allowed strings.

    Args:
        name (str): Field name used in error messages.
        value (Optional[str]): Value to validate.
        default (str): Returned when value is None.
        choices (Sequence[str]): Allowed values.

    Returns:
        str: Validated value.
    """
    if value is None:
        return default
    if not isinstance(value, str):
        raise DDAEConfigError(f"{name} must be a string, got {type(value)}")
    if value not in choices:
        raise DDAEConfigError(f"Invalid {name}: {value!r}, expected one of {tuple(choices)}")
    return value


def validate_choice_set(
    name: str,
    value: Optional[Iterable[str]],
    default: Sequence[str],
    choices: Sequence[str],
) -> tuple[str, ...]:
    """
    Validate a set of allowed strings.

    Returns:
        tuple[str, ...]: Sorted, de-duplicated values.
    """
    if value is None:
        return tuple(sorted(set(default)))
    if isinstance(value, str):
        raise DDAEConfigError(f"{name} must be a collection of strings, got a string")
    items = []
    for item in value:
        items.append(validate_choice(name, item, "", choices))
    return tuple(sorted(set(items)))


def validate_int_tuple(
    name: str,
    value: Optional[Iterable[int]],
    default: Sequence[int],
    allow_empty: bool = False,
) -> tuple[int, ...]:
    """
    Validate a sequence of strictly positive integers.

    Args:
        name (str): Field name used in error messages.
        value (Optional[Iterable[int]]): Value to validate.
        default (Sequence[int]): Returned when value is None.
        allow_empty (bool): Accept an empty sequence.

    Returns:
        tuple[int, ...]: Validated values, order preserved.
    """
    if value is None:
        return tuple(default)
    if isinstance(value, (str, bytes)):
        raise DDAEConfigError(f"{name} must be a sequence of integers")
    items = tuple(value)
    if not items and not allow_empty:
        raise DDAEConfigError(f"{name} must not be empty")
    for item in items:
        validate_positive_int(name, item, None)
    return tuple(int(item) for item in items)


def validate_bool(name: str, value: Optional[bool], default: bool) -> bool:
    """Validate a boolean flag."""
    if value is None:
        return default
    if not isinstance(value, bool):
        raise DDAEConfigError(f"{name} must be a boolean, got {type(value)}")
    return value


def validate_seed(value: Optional[int], default: int) -> int:
    """Validate a random seed: integer in [0, 2**63)."""
    seed = validate_non_negative_int("seed", value, default)
    if seed >= 2**63:
        raise DDAEConfigError(f"seed must be below 2**63, got {seed}")
    return seed


def validate_beta_range(beta_min: float, beta_max: float) -> tuple[float, float]:
    """
    Validate VP rate bounds: 0 < beta_min <= beta_max < 1.

    Raises:
        DDAEConfigError: Naming the offending bound.
    """
    if not _is_number(beta_min) or not math.isfinite(beta_min) or not 0.0 < beta_min < 1.0:
        raise DDAEConfigError(f"beta_min must lie in (0, 1), got {beta_min}")
    if not _is_number(beta_max) or not math.isfinite(beta_max) or not 0.0 < beta_max < 1.0:
        raise DDAEConfigError(f"beta_max must lie in (0, 1), got {beta_max}")
    if beta_min > beta_max:
        raise DDAEConfigError(f"beta_min ({beta_min}) must not exceed beta_max ({beta_max})")
    return float(beta_min), float(beta_max)


def validate_sigma_range(sigma_min: float, sigma_max: float) -> tuple[float, float]:
    """
    Validate VE scale bounds: 0 < sigma_min < sigma_max.

    Raises:
        DDAEConfigError: Naming the offending bound.
    """
    if not _is_number(sigma_min) or not math.isfinite(sigma_min) or sigma_min <= 0:
        raise DDAEConfigError(f"sigma_min must be positive, got {sigma_min}")
    if not _is_number(sigma_max) or not math.isfinite(sigma_max) or sigma_max <= 0:
        raise DDAEConfigError(f"sigma_max must be positive, got {sigma_max}")
    if sigma_min >= sigma_max:
        raise DDAEConfigError(f"sigma_min ({sigma_min}) must be below sigma_max ({sigma_max})")
    return float(sigma_min), float(sigma_max)
