"""
Synthetic lesion dataset: smooth random backgrounds, with hyperintense
ellipsoidal blobs added to the positive class.
"""

import logging
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import ndimage

from app.errors import ArgumentError
from app.repos.manifest_repo import ManifestRepo
from app.repos.volume_repo import write_volume
from app.schemas.volume import Manifest, ManifestEntry, Volume
from app.services.splitter import DEFAULT_FRACTIONS, stratified_split

logger = logging.getLogger(__name__)

BACKGROUND_MEAN = 0.5
FIELD_AMPLITUDE = 0.1
NOISE_STD = 0.05
BLOB_BOOST = 1.0
FIELD_SIGMAS = (0.25, 0.125)  # relative to side
MANIFEST_NAME = "manifest.tsv"


def _background(rng: np.random.Generator, side: int) -> np.ndarray:
    field = np.zeros((side,) * 3)
    for rel_sigma in FIELD_SIGMAS:
        smooth = ndimage.gaussian_filter(
            rng.standard_normal((side,) * 3), sigma=rel_sigma * side, mode="wrap"
        )
        field += smooth / (smooth.std() or 1.0)
    field -= field.mean()
    field *= FIELD_AMPLITUDE / (field.std() or 1.0)

    noise = rng.normal(0.0, NOISE_STD, size=(side,) * 3)
    noise -= noise.mean()
    return BACKGROUND_MEAN + field + noise


def _blobs(rng: np.random.Generator, side: int, boost: float) -> np.ndarray:
    grid = np.stack(np.meshgrid(*[np.arange(side, dtype=np.float64)] * 3, indexing="ij"))
    out = np.zeros((side,) * 3)
    for _ in range(rng.integers(1, 6)):
        center = rng.uniform(0.2 * side, 0.8 * side, size=3)
        radii = rng.uniform(0.05 * side, 0.15 * side, size=3)
        d2 = sum(((grid[a] - center[a]) / radii[a]) ** 2 for a in range(3))
        out += boost * np.exp(-0.5 * d2)
    return out


def synthesize_volume(
    rng: np.random.Generator, side: int, label: int, difficulty: float
) -> np.ndarray:
    voxels = _background(rng, side)
    if label == 1:
        voxels = voxels + _blobs(rng, side, BLOB_BOOST * (1.0 - difficulty))
    return voxels.astype(np.float32)


def generate_synthetic(
    out_dir: str | Path,
    n_per_class: int,
    side: int,
    seed: int,
    difficulty: float,
    fractions: Sequence[float] = DEFAULT_FRACTIONS,
) -> Manifest:
    """
    Write `2 * n_per_class` QVOL volumes under `out_dir/volumes` and a split
    manifest at `out_dir/manifest.tsv`. Generation consumes one PCG64(seed)
    stream in subject order, so a seed fixes every byte of the dataset.
    """
    if n_per_class < 1:
        raise ArgumentError(f"n_per_class must be >= 1, got {n_per_class}")
    if side < 8:
        raise ArgumentError(f"side must be >= 8, got {side}")
    if not 0.0 <= difficulty <= 1.0:
        raise ArgumentError(f"difficulty must be in [0, 1], got {difficulty}")

    out_dir = Path(out_dir)
    rng = np.random.Generator(np.random.PCG64(seed))
    entries = []
    for i in range(n_per_class):
        for label in (0, 1):
            subject_id = f"sub-{2 * i + label:04d}"
            rel_path = f"volumes/{subject_id}.qvol"
            voxels = synthesize_volume(rng, side, label, difficulty)
            write_volume(
                Volume(voxels=voxels, label=label, subject_id=subject_id), out_dir / rel_path
            )
            entries.append(ManifestEntry(path=rel_path, label=label, subject_id=subject_id))

    manifest = stratified_split(Manifest(entries=entries), fractions=fractions, seed=seed)
    ManifestRepo(out_dir / MANIFEST_NAME).save(manifest)
    logger.info(
        f"Generated {len(entries)} volumes ({side}^3, difficulty {difficulty}) in {out_dir}"
    )
    return manifest
