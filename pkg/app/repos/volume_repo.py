import logging
import struct
from pathlib import Path

import numpy as np

from app.errors import FormatError
from app.schemas.volume import Volume

logger = logging.getLogger(__name__)

MAGIC = b"QVOL"
VERSION = 1
_HEADER = struct.Struct("<4sIIII")


def encode_volume(volume: Volume) -> bytes:
    voxels = np.ascontiguousarray(volume.voxels, dtype="<f4")
    if voxels.ndim != 3:
        raise FormatError(f"volume must be 3-D, got shape {voxels.shape}")
    return _HEADER.pack(MAGIC, VERSION, *voxels.shape) + voxels.tobytes()


def decode_volume(payload: bytes, label: int = 0, subject_id: str = "") -> Volume:
    if len(payload) < 4:
        raise FormatError("truncated QVOL header", offset=len(payload))
    if payload[:4] != MAGIC:
        raise FormatError(f"bad magic {payload[:4]!r}, expected {MAGIC!r}", offset=0)
    if len(payload) < _HEADER.size:
        raise FormatError("truncated QVOL header", offset=len(payload))
    _, version, d, h, w = _HEADER.unpack_from(payload)
    if version != VERSION:
        raise FormatError(f"unsupported QVOL version {version}", offset=4)
    if min(d, h, w) < 1:
        raise FormatError(f"invalid dims {(d, h, w)}", offset=8)

    expected = d * h * w * 4
    body = payload[_HEADER.size :]
    if len(body) != expected:
        raise FormatError(
            f"payload holds {len(body)} bytes, header claims {d}x{h}x{w} f32 ({expected} bytes)",
            offset=_HEADER.size + min(len(body), expected),
        )
    voxels = np.frombuffer(body, dtype="<f4").astype(np.float32).reshape(d, h, w)
    return Volume(voxels=voxels, label=label, subject_id=subject_id)


def write_volume(volume: Volume, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_volume(volume))


def read_volume(path: str | Path, label: int = 0, subject_id: str = "") -> Volume:
    path = Path(path)
    try:
        return decode_volume(path.read_bytes(), label=label, subject_id=subject_id)
    except FormatError as e:
        logger.error(f"Failed to read volume {path}: {e}")
        raise
