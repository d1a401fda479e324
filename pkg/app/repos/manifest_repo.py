import logging
from pathlib import Path

from app.errors import FormatError
from app.repos.volume_repo import read_volume
from app.schemas.volume import Manifest, ManifestEntry, Split, Volume

logger = logging.getLogger(__name__)

UNASSIGNED = "-"


class ManifestRepo:
    """
    Line-oriented manifest: `path<TAB>label<TAB>subject_id<TAB>split`, UTF-8, LF.
    Relative volume paths resolve against the manifest's directory.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)

    @property
    def root(self) -> Path:
        return self.path.parent

    def load(self) -> Manifest:
        entries = []
        text = self.path.read_text(encoding="utf-8")
        for lineno, line in enumerate(text.split("\n"), start=1):
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 4:
                raise FormatError(
                    f"{self.path}:{lineno}: expected 4 tab-separated fields, got {len(fields)}"
                )
            path, label, subject_id, split = fields
            try:
                entries.append(
                    ManifestEntry(
                        path=path,
                        label=int(label),
                        subject_id=subject_id,
                        split=None if split == UNASSIGNED else Split(split),
                    )
                )
            except ValueError as e:
                raise FormatError(f"{self.path}:{lineno}: {e}") from e
        logger.debug(f"Loaded {len(entries)} manifest entries from {self.path}")
        return Manifest(entries=entries)

    def save(self, manifest: Manifest) -> None:
        lines = [
            "\t".join(
                [
                    e.path,
                    str(e.label),
                    e.subject_id,
                    e.split.value if e.split is not None else UNASSIGNED,
                ]
            )
            for e in manifest.entries
        ]
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "w", encoding="utf-8", newline="\n") as f:
            f.write("\n".join(lines) + ("\n" if lines else ""))

    def resolve(self, entry: ManifestEntry) -> Path:
        path = Path(entry.path)
        return path if path.is_absolute() else self.root / path

    def load_volume(self, entry: ManifestEntry) -> Volume:
        return read_volume(
            self.resolve(entry), label=entry.label, subject_id=entry.subject_id
        )
