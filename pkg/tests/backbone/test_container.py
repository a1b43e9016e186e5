"""Test checkpoint container I/O."""

import json

import pytest
import torch

try:
    from src.nts.ddae.backbone import load_container, load_network, save_container, save_network
    from src.nts.ddae.backbone.container import METADATA_KEY, SEPARATOR
    from src.nts.ddae.exceptions import ContractError, DataFormatError
except ModuleNotFoundError:
    from nts.ddae.backbone import load_container, load_network, save_container, save_network
    from nts.ddae.backbone.container import METADATA_KEY, SEPARATOR
    from nts.ddae.exceptions import ContractError, DataFormatError

# pylint: disable=import-error,unused-import,redefined-outer-name
from tests.fixtures import tiny_config, tiny_net, TINY_LEVELS


def test_round_trip_is_exact(tmp_path) -> None:
    """Arrays of every supported dtype and the metadata come back unchanged."""
    arrays = {
        "weights": torch.randn(3, 4, generator=torch.Generator().manual_seed(0)),
        "double": torch.tensor([1.0 / 3.0, -2.5e-300], dtype=torch.float64),
        "counts": torch.tensor([[1, -2], [2**40, 0]], dtype=torch.int64),
        "scalar": torch.tensor(7.5),
    }
    path = tmp_path / "nested" / "arrays.ddae"
    save_container(path, arrays, {"note": "hello", "epoch": "3"})
    loaded, metadata = load_container(path)
    assert set(loaded) == set(arrays)
    for name, value in arrays.items():
        assert loaded[name].dtype == value.dtype
        assert loaded[name].shape == value.shape
        assert torch.equal(loaded[name], value)
    assert metadata == {"note": "hello", "epoch": "3"}


def test_header_layout(tmp_path) -> None:
    """JSON header, separator, then the payload at the announced offsets."""
    path = tmp_path / "layout.ddae"
    save_container(path, {"b": torch.tensor([2.0]), "a": torch.tensor([1, 2])}, {"k": "v"})
    raw = path.read_bytes()
    split = raw.index(SEPARATOR)
    header = json.loads(raw[:split])
    assert header[METADATA_KEY] == {"k": "v"}
    assert header["a"] == {"dtype": "i64", "shape": [2], "byte_offset": 0}
    assert header["b"] == {"dtype": "f32", "shape": [1], "byte_offset": 16}
    assert len(raw) == split + len(SEPARATOR) + 20


def test_save_refuses_bad_input(tmp_path) -> None:
    """Reserved names, unsupported dtypes and non-string metadata are contract errors."""
    with pytest.raises(ContractError):
        save_container(tmp_path / "x.ddae", {METADATA_KEY: torch.zeros(1)})
    with pytest.raises(ContractError):
        save_container(tmp_path / "x.ddae", {"half": torch.zeros(1, dtype=torch.float16)})
    with pytest.raises(ContractError):
        save_container(tmp_path / "x.ddae", {"a": torch.zeros(1)}, {"epoch": 3})


def test_malformed_files(tmp_path) -> None:
    """Missing separator, broken JSON and a short payload raise DataFormatError."""
    path = tmp_path / "bad.ddae"
    path.write_bytes(b'{"a": 1}')
    with pytest.raises(DataFormatError):
        load_container(path)
    path.write_bytes(b"{not json" + SEPARATOR)
    with pytest.raises(DataFormatError):
        load_container(path)
    save_container(path, {"a": torch.zeros(4)})
    raw = path.read_bytes()
    path.write_bytes(raw[:-3])
    with pytest.raises(DataFormatError) as info:
        load_container(path)
    assert info.value.path == str(path)
    assert info.value.offset == raw.index(SEPARATOR) + len(SEPARATOR)
    with pytest.raises(FileNotFoundError):
        load_container(tmp_path / "missing.ddae")


def test_network_round_trip(tiny_net, tmp_path) -> None:
    """A saved network is rebuilt with its shape, level count and weights."""
    path = tmp_path / "model.ddae"
    save_network(tiny_net, path, {"epoch": "1"})
    _, metadata = load_container(path)
    assert metadata["epoch"] == "1"
    assert metadata["levels"] == str(TINY_LEVELS)
    loaded = load_network(path).eval()
    assert loaded.levels == TINY_LEVELS
    assert [tap.key for tap in loaded.tap_index] == [tap.key for tap in tiny_net.tap_index]
    x = torch.randn(2, 3, 8, 8, generator=torch.Generator().manual_seed(1))
    assert torch.equal(loaded(x, 3), tiny_net(x, 3))


def test_network_container_checks(tiny_net, tmp_path) -> None:
    """Containers without a network description or with missing weights are refused."""
    path = tmp_path / "plain.ddae"
    save_container(path, {"a": torch.zeros(1)})
    with pytest.raises(DataFormatError):
        load_network(path)
    state = dict(tiny_net.state_dict())
    state.pop("conv_out.bias")
    save_container(path, state, tiny_net.metadata())
    with pytest.raises(DataFormatError):
        load_network(path)


if __name__ == "__main__":
    pytest.main()
