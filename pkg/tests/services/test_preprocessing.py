import numpy as np
import pytest

from app.errors import ArgumentError
from app.schemas.volume import Volume
from app.services.preprocessing import normalize_minmax, preprocess, resize_trilinear


def vol(voxels):
    return Volume(voxels=np.asarray(voxels, dtype=np.float32), label=1, subject_id="s1")


@pytest.mark.parametrize("src, dst", [((4, 4, 4), 8), ((5, 3, 7), 6), ((8, 8, 8), 3)])
def test_constant_volume_stays_constant(src, dst):
    out = resize_trilinear(vol(np.full(src, 2.5)), dst)
    assert out.dims == (dst, dst, dst)
    assert np.allclose(out.voxels, 2.5, atol=1e-6)


def test_linear_ramp_survives_upsampling():
    side = 5
    ramp = np.broadcast_to(np.arange(side, dtype=np.float32)[:, None, None], (side,) * 3)
    out = resize_trilinear(vol(ramp), 2 * side)
    expected = np.arange(2 * side) * (side - 1) / (2 * side - 1)
    assert np.allclose(out.voxels, expected[:, None, None], atol=1e-6)


def test_same_side_is_identity(rng):
    voxels = rng.standard_normal((6, 6, 6)).astype(np.float32)
    out = resize_trilinear(vol(voxels), 6)
    assert np.allclose(out.voxels, voxels, atol=1e-6)


def test_resize_keeps_label_and_subject():
    out = resize_trilinear(vol(np.zeros((3, 3, 3))), 4)
    assert (out.label, out.subject_id) == (1, "s1")


def test_resize_rejects_tiny_sizes():
    with pytest.raises(ArgumentError):
        resize_trilinear(vol(np.zeros((4, 4, 4))), 1)
    with pytest.raises(ArgumentError):
        resize_trilinear(vol(np.zeros((1, 4, 4))), 4)


def test_normalize_maps_endpoints():
    out = normalize_minmax(vol(np.array([2.0, 4.0, 6.0]).reshape(3, 1, 1)))
    assert out.voxels.ravel().tolist() == [0.0, 0.5, 1.0]


def test_normalize_constant_volume_is_zero():
    assert not np.any(normalize_minmax(vol(np.full((2, 2, 2), 3.0))).voxels)


def test_normalize_spans_unit_interval(rng):
    out = normalize_minmax(vol(rng.normal(5, 3, (5, 5, 5))))
    assert abs(out.voxels.min()) <= 1e-7
    assert abs(out.voxels.max() - 1.0) <= 1e-7


def test_pipeline_output_is_target_cube_in_unit_range(rng):
    for _ in range(20):
        dims = tuple(int(d) for d in rng.integers(2, 12, size=3))
        out = preprocess(vol(rng.normal(0, 10, dims)), 8)
        assert out.dims == (8, 8, 8)
        assert out.voxels.min() >= 0.0 and out.voxels.max() <= 1.0
        assert out.voxels.min() == 0.0 and out.voxels.max() == 1.0
