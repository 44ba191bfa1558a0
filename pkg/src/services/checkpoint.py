"""
Binary checkpoint format for trained models.

Layout (little-endian):
    b"QIRN" | u32 version | u32 header length | header (canonical JSON, UTF-8)
    | f64 payload | u32 CRC32 of every preceding byte

The header holds the model config, the ordered list of payload sections
(name, kind, shape), optional optimizer hyperparameters and training metadata.
"""
import json
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np

from src.config import CHECKPOINT_MAGIC, CHECKPOINT_VERSION, get_logger
from src.models import ModelConfig
from src.nn.layers import LayerStack
from src.nn.optim import Adam
from src.services.families import build_model

logger = get_logger(__name__)

_PREFIX = struct.Struct("<4sII")
_CRC = struct.Struct("<I")


class CheckpointError(Exception):
    """Base exception for checkpoint errors."""
    pass


class ChecksumError(CheckpointError):
    """Raised when the stored CRC32 does not match the file contents."""
    pass


class VersionMismatchError(CheckpointError):
    """Raised for an unknown magic number or format version."""
    pass


class TruncatedCheckpointError(CheckpointError):
    """Raised when the file ends before the declared contents."""
    pass


@dataclass
class Checkpoint:
    """Decoded checkpoint contents."""
    format_version: int
    config: ModelConfig
    params: Dict[str, np.ndarray]
    buffers: Dict[str, np.ndarray] = field(default_factory=dict)
    optimizer: Dict[str, Any] = field(default_factory=dict)
    optimizer_moments: Dict[str, np.ndarray] = field(default_factory=dict)
    metadata: Dict[str, Any] = field(default_factory=dict)


def _canonical(obj: Any) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def encode_checkpoint(
    model: LayerStack,
    optimizer: Optional[Adam] = None,
    metadata: Optional[Dict[str, Any]] = None,
) -> bytes:
    """Serialize `model` (and optionally its optimizer state) to checkpoint bytes."""
    if model.config is None:
        raise CheckpointError("Model has no config attached; build it with build_model")

    sections: List[Dict[str, Any]] = []
    arrays: List[np.ndarray] = []

    def add(kind: str, name: str, array: np.ndarray) -> None:
        sections.append({"kind": kind, "name": name, "shape": list(array.shape)})
        arrays.append(np.ascontiguousarray(array, dtype="<f8").ravel())

    for name, p in model.named_parameters().items():
        add("param", name, p)
    for name, b in model.named_buffers().items():
        add("buffer", name, b)

    header: Dict[str, Any] = {
        "config": model.config.to_dict(),
        "sections": sections,
        "metadata": metadata or {},
    }
    if optimizer is not None:
        header["optimizer"] = optimizer.to_dict()
        for group, state in optimizer.states.items():
            for name in sorted(state.m):
                add("adam_m", f"{group}/{name}", state.m[name])
                add("adam_v", f"{group}/{name}", state.v[name])

    header_bytes = _canonical(header)
    payload = np.concatenate(arrays).tobytes() if arrays else b""
    body = _PREFIX.pack(CHECKPOINT_MAGIC, CHECKPOINT_VERSION, len(header_bytes)) + header_bytes + payload
    return body + _CRC.pack(zlib.crc32(body) & 0xFFFFFFFF)


def decode_checkpoint(data: bytes) -> Checkpoint:
    """Parse checkpoint bytes.

    Raises:
        VersionMismatchError: Wrong magic or unsupported version
        TruncatedCheckpointError: File shorter than its declared contents
        ChecksumError: CRC32 mismatch
    """
    if len(data) < _PREFIX.size:
        raise TruncatedCheckpointError(f"Checkpoint is only {len(data)} bytes")
    magic, version, header_len = _PREFIX.unpack_from(data)
    if magic != CHECKPOINT_MAGIC:
        raise VersionMismatchError(f"Not a checkpoint file (magic {magic!r})")
    if version != CHECKPOINT_VERSION:
        raise VersionMismatchError(f"Checkpoint version {version}, expected {CHECKPOINT_VERSION}")
    if len(data) < _PREFIX.size + header_len + _CRC.size:
        raise TruncatedCheckpointError("Checkpoint ends inside its header")

    try:
        header = json.loads(data[_PREFIX.size:_PREFIX.size + header_len].decode("utf-8"))
        needed = sum(int(np.prod(s["shape"], dtype=np.int64)) for s in header["sections"])
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise ChecksumError(f"Checkpoint header is unreadable: {e}") from e

    expected = _PREFIX.size + header_len + 8 * needed + _CRC.size
    if len(data) < expected:
        raise TruncatedCheckpointError(f"Checkpoint has {len(data)} bytes, header declares {expected}")
    if len(data) > expected:
        raise ChecksumError(f"Checkpoint has {len(data) - expected} unexpected trailing bytes")

    (stored_crc,) = _CRC.unpack_from(data, len(data) - _CRC.size)
    body = data[:-_CRC.size]
    if zlib.crc32(body) & 0xFFFFFFFF != stored_crc:
        raise ChecksumError("Checkpoint CRC32 mismatch; file is corrupted")

    payload = np.frombuffer(body[_PREFIX.size + header_len:], dtype="<f8")

    checkpoint = Checkpoint(
        format_version=version,
        config=ModelConfig.from_dict(header["config"]),
        params={},
        optimizer=header.get("optimizer", {}),
        metadata=header.get("metadata", {}),
    )
    offset = 0
    targets = {"param": checkpoint.params, "buffer": checkpoint.buffers}
    for section in header["sections"]:
        size = int(np.prod(section["shape"], dtype=np.int64))
        array = payload[offset:offset + size].astype(np.float64).reshape(section["shape"])
        offset += size
        kind = section["kind"]
        if kind in targets:
            targets[kind][section["name"]] = array
        else:
            checkpoint.optimizer_moments[f"{kind}:{section['name']}"] = array
    return checkpoint


def save_checkpoint(
    model: LayerStack,
    path: Union[str, Path],
    optimizer: Optional[Adam] = None,
    metadata: Optional[Dict[str, Any]] = None,
) -> Path:
    """Write a checkpoint file.

    Returns:
        Path to the saved file
    """
    filepath = Path(path)
    try:
        filepath.parent.mkdir(parents=True, exist_ok=True)
        filepath.write_bytes(encode_checkpoint(model, optimizer, metadata))
        logger.info(f"Saved checkpoint ({model.num_params} params) to {filepath}")
        return filepath
    except OSError as e:
        logger.error(f"Failed to write checkpoint {filepath}: {e}")
        raise


def read_checkpoint(path: Union[str, Path]) -> Checkpoint:
    filepath = Path(path)
    checkpoint = decode_checkpoint(filepath.read_bytes())
    logger.debug(f"Read checkpoint {filepath}: {checkpoint.config}")
    return checkpoint


def restore_model(checkpoint: Checkpoint) -> LayerStack:
    """Rebuild the model architecture and load the stored arrays into it."""
    model = build_model(checkpoint.config)
    params = model.named_parameters()
    if set(params) != set(checkpoint.params):
        raise CheckpointError("Checkpoint parameters do not match the model architecture")
    for name, array in checkpoint.params.items():
        if params[name].shape != array.shape:
            raise CheckpointError(f"Shape mismatch for '{name}': {array.shape} vs {params[name].shape}")
        params[name][...] = array
    model.load_buffers(checkpoint.buffers)
    model.eval()
    return model


def restore_optimizer(optimizer: Adam, checkpoint: Checkpoint) -> Adam:
    """Load stored Adam moments and step counters into `optimizer`."""
    for group, hyper in checkpoint.optimizer.items():
        if group in optimizer.states:
            optimizer.states[group].step = int(hyper.get("step", 0))
    for key, array in checkpoint.optimizer_moments.items():
        kind, qualified = key.split(":", 1)
        group, name = qualified.split("/", 1)
        state = optimizer.states[group]
        (state.m if kind == "adam_m" else state.v)[name] = array
    return optimizer


def load_checkpoint(path: Union[str, Path]) -> LayerStack:
    """Load a model from a checkpoint file, in eval mode.

    Raises:
        CheckpointError: For any version, truncation or checksum failure
    """
    return restore_model(read_checkpoint(path))
