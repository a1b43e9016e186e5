"""Test canonical JSON and weight digests."""

import pytest
import torch
from torch import nn

try:
    from src.nts.ddae.utilities.digest import (
        canonical_json,
        module_digest,
        tensor_digest,
        text_digest,
    )
except ModuleNotFoundError:
    from nts.ddae.utilities.digest import canonical_json, module_digest, tensor_digest, text_digest


def test_canonical_json() -> None:
    """
    Test key ordering, compactness and the refusal of non-finite numbers.
    """
    assert canonical_json({"b": 1, "a": [1, (2, 3)]}) == '{"a":[1,[2,3]],"b":1}'
    assert canonical_json({"a": 1, "b": 2}) == canonical_json({"b": 2, "a": 1})
    with pytest.raises(ValueError):
        canonical_json({"x": float("nan")})
    assert text_digest("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"


def test_tensor_digest_is_bitwise() -> None:
    """
    Test that digests follow the exact bytes, dtypes and shapes.
    """
    value = torch.arange(6, dtype=torch.float32)
    assert tensor_digest({"w": value}) == tensor_digest({"w": value.clone()})
    assert tensor_digest({"w": value}) != tensor_digest({"w": value.double()})
    assert tensor_digest({"w": value}) != tensor_digest({"w": value.reshape(2, 3)})
    nudged = value.clone()
    nudged[3] = torch.nextafter(nudged[3], torch.tensor(10.0))
    assert tensor_digest({"w": value}) != tensor_digest({"w": nudged})
    assert tensor_digest({"a": value, "b": value}) == tensor_digest({"b": value, "a": value})


def test_module_digest() -> None:
    """
    Test module digests before and after an update.
    """
    module = nn.Linear(3, 2)
    before = module_digest(module)
    assert module_digest(module) == before
    with torch.no_grad():
        module.bias.add_(1.0)
    assert module_digest(module) != before


if __name__ == "__main__":
    pytest.main()
