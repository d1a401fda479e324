import struct

import numpy as np
import pytest

from app.errors import FormatError
from app.repos.volume_repo import decode_volume, encode_volume, read_volume, write_volume
from app.schemas.volume import Volume


def test_write_then_read_is_bit_identical(tmp_path, rng):
    voxels = rng.standard_normal((4, 4, 4)).astype(np.float32)
    path = tmp_path / "nested" / "v.qvol"
    write_volume(Volume(voxels=voxels), path)
    out = read_volume(path, label=1, subject_id="s")
    assert out.voxels.tobytes() == voxels.tobytes()
    assert (out.label, out.subject_id, out.dims) == (1, "s", (4, 4, 4))


def test_header_layout_is_little_endian():
    payload = encode_volume(Volume(voxels=np.zeros((2, 3, 4), dtype=np.float32)))
    assert payload[:4] == b"QVOL"
    assert struct.unpack("<IIII", payload[4:20]) == (1, 2, 3, 4)
    assert len(payload) == 20 + 2 * 3 * 4 * 4


def test_bad_magic_reports_offset_zero():
    payload = b"XVOL" + encode_volume(Volume(voxels=np.zeros((1, 1, 1), dtype=np.float32)))[4:]
    with pytest.raises(FormatError, match="magic") as exc:
        decode_volume(payload)
    assert exc.value.offset == 0


def test_unsupported_version():
    payload = bytearray(encode_volume(Volume(voxels=np.zeros((1, 1, 1), dtype=np.float32))))
    payload[4:8] = struct.pack("<I", 2)
    with pytest.raises(FormatError, match="version"):
        decode_volume(bytes(payload))


def test_truncated_payload():
    header = b"QVOL" + struct.pack("<IIII", 1, 8, 8, 8)
    with pytest.raises(FormatError, match="truncat|claims") as exc:
        decode_volume(header + np.zeros(100, dtype="<f4").tobytes())
    assert exc.value.offset == 20 + 400


def test_truncated_header():
    with pytest.raises(FormatError):
        decode_volume(b"QVOL\x01\x00")
