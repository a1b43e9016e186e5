"""
Checkpoint container.

A container is a single file holding named arrays:

    <UTF-8 JSON header> b"\\n\\0" <payload>

The header maps every array name to ``{"dtype": "f32" | "f64" | "i64", "shape": [...],
"byte_offset": n}`` where the offset is relative to the start of the payload; the payload holds
the little-endian raw values in row-major order. An optional ``"__metadata__"`` entry maps
strings to strings and owns no payload. Round trips are bitwise exact.

Functions:
    - save_container(path, arrays, metadata=None) -> None
    - load_container(path) -> tuple[dict[str, torch.Tensor], dict[str, str]]
    - save_network(net, path) -> None
    - load_network(path) -> DDAENetwork
"""

import json
from logging import Logger, getLogger
from pathlib import Path
from typing import Mapping, Optional, Union

import numpy as np
import torch

from .unet import DDAENetwork
from ..config import DDAEConfig
from ..exceptions import ContractError, DataFormatError

SEPARATOR: bytes = b"\n\0"
METADATA_KEY: str = "__metadata__"

_CODES: dict[torch.dtype, tuple[str, str]] = {
    torch.float32: ("f32", "<f4"),
    torch.float64: ("f64", "<f8"),
    torch.int64: ("i64", "<i8"),
}
_NUMPY_OF_CODE: dict[str, str] = {code: np_type for code, np_type in _CODES.values()}
_TORCH_OF_CODE: dict[str, torch.dtype] = {code: dtype for dtype, (code, _) in _CODES.items()}

PathLike = Union[str, Path]


def save_container(
    path: PathLike,
    arrays: Mapping[str, torch.Tensor],
    metadata: Optional[Mapping[str, str]] = None,
    logger: Optional[Logger] = None,
) -> None:
    """
    Write named arrays to a container file.

    Args:
        path (PathLike): Output file; parent directories are created.
        arrays (Mapping[str, torch.Tensor]): float32, float64 or int64 tensors.
        metadata (Optional[Mapping[str, str]]): String metadata.
        logger (Optional[Logger]): Logger, module logger when None.

    Raises:
        ContractError: Unsupported dtype, reserved name or non-string metadata.
    """
    logger = logger if isinstance(logger, Logger) else getLogger(__name__)
    header: dict = {}
    chunks: list[bytes] = []
    offset = 0
    for name in sorted(arrays):
        if name == METADATA_KEY:
            raise ContractError(f"{METADATA_KEY} is a reserved array name")
        tensor = arrays[name].detach().to("cpu")
        if tensor.dtype not in _CODES:
            raise ContractError(f"Array {name!r} has unsupported dtype {tensor.dtype}")
        code, np_type = _CODES[tensor.dtype]
        raw = tensor.contiguous().numpy().astype(np_type, copy=False).tobytes(order="C")
        header[name] = {"dtype": code, "shape": list(tensor.shape), "byte_offset": offset}
        chunks.append(raw)
        offset += len(raw)
    if metadata:
        if not all(isinstance(k, str) and isinstance(v, str) for k, v in metadata.items()):
            raise ContractError("Container metadata must map strings to strings")
        header[METADATA_KEY] = dict(metadata)
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, "wb") as stream:
        stream.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        stream.write(SEPARATOR)
        for chunk in chunks:
            stream.write(chunk)
    logger.debug("Saved %d arrays (%d payload bytes) to %s", len(chunks), offset, target)


def load_container(path: PathLike) -> tuple[dict[str, torch.Tensor], dict[str, str]]:
    """
    Read a container file.

    Returns:
        tuple[dict[str, torch.Tensor], dict[str, str]]: Arrays and metadata.

    Raises:
        FileNotFoundError: Missing file.
        DataFormatError: Malformed header or payload, with the byte offset of the problem.
    """
    source = str(path)
    data = Path(path).read_bytes()
    split = data.find(SEPARATOR)
    if split < 0:
        raise DataFormatError("Container header separator not found", source, 0)
    try:
        header = json.loads(data[:split].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataFormatError(f"Container header is not valid JSON: {exc}", source, 0) from exc
    if not isinstance(header, dict):
        raise DataFormatError("Container header must be a JSON object", source, 0)
    payload_start = split + len(SEPARATOR)
    payload = memoryview(data)[payload_start:]
    metadata = header.pop(METADATA_KEY, {})
    arrays: dict[str, torch.Tensor] = {}
    for name, entry in header.items():
        try:
            code = entry["dtype"]
            shape = [int(n) for n in entry["shape"]]
            start = int(entry["byte_offset"])
            np_type = _NUMPY_OF_CODE[code]
        except (KeyError, TypeError, ValueError) as exc:
            raise DataFormatError(f"Bad header entry for {name!r}: {entry!r}", source, 0) from exc
        count = int(np.prod(shape, dtype=np.int64))
        length = count * np.dtype(np_type).itemsize
        if start < 0 or start + length > len(payload):
            raise DataFormatError(
                f"Array {name!r} runs past the end of the payload", source, payload_start + start
            )
        values = np.frombuffer(payload[start : start + length], dtype=np_type).reshape(shape)
        arrays[name] = torch.from_numpy(values.astype(values.dtype.newbyteorder("="), copy=True))
        if arrays[name].dtype != _TORCH_OF_CODE[code]:
            arrays[name] = arrays[name].to(_TORCH_OF_CODE[code])
    return arrays, {str(k): str(v) for k, v in dict(metadata).items()}


def save_network(
    net: DDAENetwork,
    path: PathLike,
    extra_metadata: Optional[Mapping[str, str]] = None,
    logger: Optional[Logger] = None,
) -> None:
    """Save the weights and the configuration of a network."""
    metadata = net.metadata()
    if extra_metadata:
        metadata.update(extra_metadata)
    save_container(path, net.state_dict(), metadata, logger)


def load_network(path: PathLike) -> DDAENetwork:
    """
    Rebuild a network saved by `save_network`.

    Raises:
        DataFormatError: Missing network configuration or mismatching weights.
    """
    arrays, metadata = load_container(path)
    if "network_config" not in metadata:
        raise DataFormatError("Container has no network configuration", str(path), 0)
    config = DDAEConfig.from_dict(json.loads(metadata["network_config"]))
    levels = int(metadata["levels"]) if metadata.get("levels") else None
    net = DDAENetwork(config, levels)
    try:
        net.load_state_dict(arrays, strict=True)
    except RuntimeError as exc:
        raise DataFormatError(f"Weights do not match the network: {exc}", str(path), 0) from exc
    return net
