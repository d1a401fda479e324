"""
QRCK checkpoints, little-endian throughout:

    magic "QRCK" | version u32 | config length u32 | config JSON (UTF-8)
    | tensor count u32 | tensors | moment count u32 | moment tensors

Each tensor is (rank u32, dims u32 x rank, f32 data). Tensors follow the
model's declaration order; moment tensors are (m, v) pairs for every trainable
tensor in the same order.
"""

import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from pydantic import ValidationError

from app.errors import FormatError
from app.schemas.checkpoint import CheckpointHeader

logger = logging.getLogger(__name__)

MAGIC = b"QRCK"
VERSION = 1
_U32 = struct.Struct("<I")


@dataclass
class Checkpoint:
    header: CheckpointHeader
    tensors: list[np.ndarray]
    moments: list[np.ndarray] = field(default_factory=list)


def _pack_tensor(array: np.ndarray) -> bytes:
    array = np.ascontiguousarray(array, dtype="<f4")
    parts = [_U32.pack(array.ndim)]
    parts.extend(_U32.pack(d) for d in array.shape)
    parts.append(array.tobytes())
    return b"".join(parts)


def encode_checkpoint(checkpoint: Checkpoint) -> bytes:
    config = checkpoint.header.model_dump_json().encode("utf-8")
    parts = [MAGIC, _U32.pack(VERSION), _U32.pack(len(config)), config]
    parts.append(_U32.pack(len(checkpoint.tensors)))
    parts.extend(_pack_tensor(t) for t in checkpoint.tensors)
    parts.append(_U32.pack(len(checkpoint.moments)))
    parts.extend(_pack_tensor(t) for t in checkpoint.moments)
    return b"".join(parts)


class _Reader:
    def __init__(self, payload: bytes):
        self.payload = payload
        self.offset = 0

    def take(self, size: int, what: str) -> bytes:
        if self.offset + size > len(self.payload):
            raise FormatError(f"truncated checkpoint while reading {what}", offset=self.offset)
        chunk = self.payload[self.offset : self.offset + size]
        self.offset += size
        return chunk

    def u32(self, what: str) -> int:
        return _U32.unpack(self.take(4, what))[0]

    def tensor(self) -> np.ndarray:
        rank = self.u32("tensor rank")
        dims = [self.u32("tensor dims") for _ in range(rank)]
        count = int(np.prod(dims)) if dims else 1
        data = self.take(4 * count, "tensor data")
        return np.frombuffer(data, dtype="<f4").astype(np.float32).reshape(dims)


def decode_checkpoint(payload: bytes) -> Checkpoint:
    reader = _Reader(payload)
    magic = reader.take(4, "magic")
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}", offset=0)
    version = reader.u32("version")
    if version != VERSION:
        raise FormatError(f"unsupported checkpoint version {version}", offset=4)

    config_offset = reader.offset
    config = reader.take(reader.u32("config length"), "config block")
    try:
        header = CheckpointHeader.model_validate_json(config)
    except ValidationError as e:
        raise FormatError(f"invalid checkpoint config block: {e}", offset=config_offset) from e

    tensors = [reader.tensor() for _ in range(reader.u32("tensor count"))]
    moments = [reader.tensor() for _ in range(reader.u32("moment count"))]
    if reader.offset != len(payload):
        raise FormatError("trailing bytes after checkpoint", offset=reader.offset)
    return Checkpoint(header=header, tensors=tensors, moments=moments)


def save_checkpoint(path: str | Path, checkpoint: Checkpoint) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(encode_checkpoint(checkpoint))
    tmp.replace(path)
    logger.debug(f"Saved checkpoint {path} (epoch {checkpoint.header.epoch})")


def load_checkpoint(path: str | Path) -> Checkpoint:
    return decode_checkpoint(Path(path).read_bytes())


def check_shapes(names: Sequence[str], expected: Sequence[tuple], found: Sequence[np.ndarray]) -> None:
    if len(expected) != len(found):
        raise FormatError(
            f"checkpoint holds {len(found)} tensors, model declares {len(expected)}"
        )
    for name, shape, tensor in zip(names, expected, found):
        if tuple(shape) != tuple(tensor.shape):
            raise FormatError(
                f"checkpoint tensor {name} has shape {tensor.shape}, model expects {shape}"
            )
