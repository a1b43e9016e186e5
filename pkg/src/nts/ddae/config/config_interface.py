"""
Abstract base class for DDAE configuration objects.

All configuration classes share the same contract: validated properties, a dictionary form that
round-trips through the constructor, and a canonical JSON rendering used for run identification.

Classes:
    ConfigModel (ABC): Base of every configuration class.

Usage:
    Subclasses implement `to_dict()`. Construction from a mapping goes through `from_dict()`,
    which ignores unknown keys so that stored configurations stay loadable after fields are
    retired.
"""

import inspect
import json
from abc import ABC, abstractmethod
from typing import Any, TypeVar

from ..utilities.digest import canonical_json, text_digest

ConfigT = TypeVar("ConfigT", bound="ConfigModel")


class ConfigModel(ABC):
    """
    Abstract configuration model.

    Methods:
        to_dict() -> dict: Plain-data representation (JSON compatible).
        from_dict(data) -> ConfigModel: Construct from a mapping, unknown keys ignored.
        to_json() -> str: Canonical JSON (sorted keys, compact separators).
        digest() -> str: SHA-256 of the canonical JSON.
    """

    @abstractmethod
    def to_dict(self) -> dict:
        """
        Converts the config to a dictionary.

        Returns:
            dict: A JSON-compatible dictionary representation of the config.
        """

    @classmethod
    def from_dict(cls: type[ConfigT], data: dict) -> ConfigT:
        """
        Build a config from a mapping.

        Keys that are not constructor parameters are ignored.

        Args:
            data (dict): Mapping of field names to values.

        Returns:
            ConfigModel: The validated configuration.
        """
        accepted = inspect.signature(cls.__init__).parameters
        return cls(**{k: v for k, v in data.items() if k in accepted})

    def to_json(self) -> str:
        """Canonical JSON form: semantically equal configs render identically."""
        return canonical_json(self.to_dict())

    def digest(self) -> str:
        """SHA-256 hex digest of the canonical JSON form."""
        return text_digest(self.to_json())

    def __eq__(self, other: Any) -> bool:
        if not isinstance(other, ConfigModel):
            return NotImplemented
        return type(self) is type(other) and self.to_json() == other.to_json()

    def __hash__(self) -> int:
        return hash(self.to_json())

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}({json.dumps(self.to_dict(), sort_keys=True)})"
