from dataclasses import dataclass
from enum import Enum
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, Field


class Split(str, Enum):
    train = "train"
    val = "val"
    test = "test"


@dataclass
class Volume:
    """A 3D intensity grid, z slowest. `voxels` has shape `dims`."""

    voxels: np.ndarray
    label: int = 0
    subject_id: str = ""

    @property
    def dims(self) -> tuple[int, int, int]:
        return tuple(self.voxels.shape)


class ManifestEntry(BaseModel):
    path: str
    label: int = Field(..., ge=0, le=1)
    subject_id: str = Field(..., min_length=1)
    split: Optional[Split] = None


class Manifest(BaseModel):
    entries: List[ManifestEntry] = Field(default_factory=list)

    def split(self, split: Split) -> List[ManifestEntry]:
        return [e for e in self.entries if e.split == split]

    def subjects_by_split(self) -> dict[Split, set[str]]:
        out: dict[Split, set[str]] = {s: set() for s in Split}
        for entry in self.entries:
            if entry.split is not None:
                out[entry.split].add(entry.subject_id)
        return out
