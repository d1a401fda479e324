from app.main import main
from app.repos.manifest_repo import ManifestRepo


def test_generate_writes_dataset(tmp_path, capsys):
    out = tmp_path / "data"
    code = main(["--threads", "1", "generate", "--out", str(out), "--n-per-class", "10", "--side", "8"])

    assert code == 0
    stdout = capsys.readouterr().out
    assert "wrote 20 volumes" in stdout
    assert "train=14 val=2 test=4" in stdout
    manifest = ManifestRepo(out / "manifest.tsv").load()
    assert len(manifest.entries) == 20
    assert all((out / e.path).exists() for e in manifest.entries)


def test_generate_is_deterministic(tmp_path):
    args = ["--n-per-class", "4", "--side", "8", "--seed", "5"]
    assert main(["generate", "--out", str(tmp_path / "a"), *args]) == 0
    assert main(["generate", "--out", str(tmp_path / "b"), *args]) == 0

    files_a = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(tmp_path / "b") for p in (tmp_path / "b").rglob("*") if p.is_file())
    assert files_a == files_b
    for rel in files_a:
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()


def test_generate_requires_out():
    assert main(["generate"]) == 2


def test_generate_rejects_difficulty_above_one(tmp_path):
    assert main(["generate", "--out", str(tmp_path), "--difficulty", "1.5"]) == 2


def test_generate_rejects_tiny_side(tmp_path):
    assert main(["generate", "--out", str(tmp_path), "--side", "4"]) == 2
