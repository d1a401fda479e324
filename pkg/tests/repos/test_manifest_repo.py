import pytest

from app.errors import FormatError
from app.repos.manifest_repo import ManifestRepo
from app.schemas.volume import Manifest, ManifestEntry, Split


def test_save_then_load(tmp_path):
    manifest = Manifest(
        entries=[
            ManifestEntry(path="volumes/a.qvol", label=0, subject_id="a", split=Split.train),
            ManifestEntry(path="volumes/b.qvol", label=1, subject_id="b", split=None),
        ]
    )
    repo = ManifestRepo(tmp_path / "manifest.tsv")
    repo.save(manifest)
    assert repo.load() == manifest
    raw = (tmp_path / "manifest.tsv").read_bytes()
    assert b"\r" not in raw
    assert raw.splitlines()[1] == b"volumes/b.qvol\t1\tb\t-"


def test_relative_paths_resolve_against_manifest_dir(tmp_path):
    repo = ManifestRepo(tmp_path / "data" / "manifest.tsv")
    entry = ManifestEntry(path="volumes/a.qvol", label=0, subject_id="a")
    assert repo.resolve(entry) == tmp_path / "data" / "volumes" / "a.qvol"


@pytest.mark.parametrize(
    "line",
    ["a.qvol\t0\ta", "a.qvol\t2\ta\ttrain", "a.qvol\tx\ta\ttrain", "a.qvol\t0\ta\tholdout"],
)
def test_malformed_lines_name_the_line(tmp_path, line):
    path = tmp_path / "manifest.tsv"
    path.write_text("ok.qvol\t1\tok\tval\n" + line + "\n", encoding="utf-8")
    with pytest.raises(FormatError, match=":2:"):
        ManifestRepo(path).load()
