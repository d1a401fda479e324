import logging

import numpy as np
from scipy import ndimage

from app.errors import ArgumentError
from app.schemas.volume import Volume

logger = logging.getLogger(__name__)


def resize_trilinear(vol: Volume, target_side: int) -> Volume:
    """
    Resample `vol` to a `target_side`^3 grid with trilinear interpolation.
    Sampling is corner-aligned: target index i maps to source coordinate
    i * (src - 1) / (dst - 1), so both end voxels are kept exactly.
    """
    if target_side < 2:
        raise ArgumentError(f"target_side must be >= 2, got {target_side}")
    if min(vol.dims) < 2:
        raise ArgumentError(f"every source dim must be >= 2, got {vol.dims}")

    voxels = np.asarray(vol.voxels, dtype=np.float64)
    if vol.dims == (target_side,) * 3:
        return Volume(voxels=voxels.astype(np.float32), label=vol.label, subject_id=vol.subject_id)

    axes = [
        np.arange(target_side, dtype=np.float64) * (src - 1) / (target_side - 1)
        for src in vol.dims
    ]
    coords = np.stack(np.meshgrid(*axes, indexing="ij"))
    resized = ndimage.map_coordinates(voxels, coords, order=1, mode="nearest")
    return Volume(voxels=resized.astype(np.float32), label=vol.label, subject_id=vol.subject_id)


def normalize_minmax(vol: Volume) -> Volume:
    """Affine map onto [0, 1]; a constant volume maps to all zeros."""
    voxels = np.asarray(vol.voxels, dtype=np.float64)
    lo, hi = voxels.min(), voxels.max()
    if hi == lo:
        out = np.zeros_like(voxels)
    else:
        out = np.clip((voxels - lo) / (hi - lo), 0.0, 1.0)
    return Volume(voxels=out.astype(np.float32), label=vol.label, subject_id=vol.subject_id)


def preprocess(vol: Volume, target_side: int) -> Volume:
    return normalize_minmax(resize_trilinear(vol, target_side))
