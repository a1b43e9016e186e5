"""
Digest helper functions.

This module contains the functions used to identify runs and to verify that an operation left
model weights untouched. Configurations are hashed through a canonical JSON rendering so that
permuting keys does not change the identity of a run; weights are hashed from their exact bytes
so that a digest match means bitwise equality.

Functions:
    - canonical_json(data) -> str:
        Renders JSON-compatible data with sorted keys and compact separators.
    - text_digest(text) -> str:
        SHA-256 hex digest of a UTF-8 string.
    - tensor_digest(tensors) -> str:
        SHA-256 hex digest over named tensors (names, dtypes, shapes and raw bytes).
    - module_digest(module) -> str:
        `tensor_digest` of a module state dict.
"""

import hashlib
import json
from typing import Any, Mapping

import torch
from torch import nn


def canonical_json(data: Any) -> str:
    """
    Render data as canonical JSON.

    Args:
        data (Any): JSON-compatible data (tuples are rendered as lists).

    Returns:
        str: JSON text with sorted keys, no insignificant whitespace and no NaN/Infinity tokens.
    """
    return json.dumps(data, sort_keys=True, separators=(",", ":"), allow_nan=False)


def text_digest(text: str) -> str:
    """SHA-256 hex digest of a UTF-8 string."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def tensor_digest(tensors: Mapping[str, torch.Tensor]) -> str:
    """
    Hash named tensors bitwise.

    Names are visited in sorted order; each entry contributes its name, dtype, shape and the raw
    bytes of its contiguous CPU copy.

    Args:
        tensors (Mapping[str, torch.Tensor]): Named tensors, e.g. a state dict.

    Returns:
        str: SHA-256 hex digest.
    """
    hasher = hashlib.sha256()
    for name in sorted(tensors):
        value = tensors[name].detach().to("cpu").contiguous()
        hasher.update(name.encode("utf-8"))
        hasher.update(str(value.dtype).encode("utf-8"))
        hasher.update(str(tuple(value.shape)).encode("utf-8"))
        hasher.update(value.reshape(-1).view(torch.uint8).numpy().tobytes())
    return hasher.hexdigest()


def module_digest(module: nn.Module) -> str:
    """Bitwise digest of a module's parameters and buffers."""
    return tensor_digest(module.state_dict())
