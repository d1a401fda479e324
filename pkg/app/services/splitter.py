import logging
import math
from typing import Sequence

import numpy as np

from app.errors import ArgumentError
from app.schemas.volume import Manifest, Split

logger = logging.getLogger(__name__)

DEFAULT_FRACTIONS = (0.65, 0.15, 0.20)
_ORDER = (Split.train, Split.val, Split.test)


def _split_counts(n: int, fractions: Sequence[float]) -> dict[Split, int]:
    # floor for val/test, remainder to train
    val = math.floor(n * fractions[1] + 1e-9)
    test = math.floor(n * fractions[2] + 1e-9)
    return {Split.train: n - val - test, Split.val: val, Split.test: test}


def stratified_split(
    manifest: Manifest,
    fractions: Sequence[float] = DEFAULT_FRACTIONS,
    seed: int = 0,
) -> Manifest:
    """
    Assign every subject to train/val/test, class by class. Subjects of each
    class are shuffled with PCG64(seed) and cut contiguously; all entries of a
    subject land in the same split.
    """
    if len(fractions) != 3 or any(f < 0 for f in fractions):
        raise ArgumentError(f"fractions must be three non-negative reals, got {fractions}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ArgumentError(f"fractions must sum to 1, got {sum(fractions)}")

    subject_label: dict[str, int] = {}
    for entry in manifest.entries:
        previous = subject_label.setdefault(entry.subject_id, entry.label)
        if previous != entry.label:
            raise ArgumentError(f"subject {entry.subject_id} carries both labels")

    n_splits = sum(1 for f in fractions if f > 0)
    rng = np.random.Generator(np.random.PCG64(seed))
    assignment: dict[str, Split] = {}
    for label in sorted(set(subject_label.values())):
        subjects = [s for s, lbl in subject_label.items() if lbl == label]
        if len(subjects) < n_splits:
            raise ArgumentError(
                f"class {label} has {len(subjects)} subjects, fewer than {n_splits} splits"
            )
        shuffled = [subjects[i] for i in rng.permutation(len(subjects))]
        counts = _split_counts(len(shuffled), fractions)
        start = 0
        for split in _ORDER:
            for subject in shuffled[start : start + counts[split]]:
                assignment[subject] = split
            start += counts[split]
        logger.debug(
            f"class {label}: "
            + " ".join(f"{s.value}={counts[s]}" for s in _ORDER)
        )

    entries = [
        e.model_copy(update={"split": assignment[e.subject_id]}) for e in manifest.entries
    ]
    return Manifest(entries=entries)
