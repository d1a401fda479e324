import math

import numpy as np
import pytest

from app.schemas.config import QLayerConfig, RunConfig
from app.services.statevector import GateKind, StateVector, cx, h, ry, rz, zz
from app.services.synthetic import MANIFEST_NAME, generate_synthetic


class FakeExecutor:
    """
    Executor stand-in that records map() calls and evaluates in order.
    Set reverse=True to compute items back-to-front while still yielding
    results in submission order, as a real pool may.
    """

    def __init__(self, reverse: bool = False):
        self.reverse = reverse
        self.calls = 0

    def map(self, fn, *iterables):
        self.calls += 1
        items = list(zip(*iterables))
        order = range(len(items) - 1, -1, -1) if self.reverse else range(len(items))
        results = [None] * len(items)
        for i in order:
            results[i] = fn(*items[i])
        return iter(results)


def random_state(rng: np.random.Generator, n: int) -> StateVector:
    amps = rng.standard_normal(1 << n) + 1j * rng.standard_normal(1 << n)
    return StateVector(n, amps / np.linalg.norm(amps))


def random_gate(rng: np.random.Generator, n: int):
    kinds = [GateKind.H, GateKind.RY, GateKind.RZ]
    if n > 1:
        kinds += [GateKind.CX, GateKind.ZZ]
    kind = kinds[int(rng.integers(len(kinds)))]
    angle = float(rng.uniform(-2 * math.pi, 2 * math.pi))
    if kind in (GateKind.CX, GateKind.ZZ):
        a, b = (int(q) for q in rng.choice(n, size=2, replace=False))
        return cx(a, b) if kind is GateKind.CX else zz(a, b, angle)
    q = int(rng.integers(n))
    if kind is GateKind.H:
        return h(q)
    return ry(q, angle) if kind is GateKind.RY else rz(q, angle)


def embed_gate(local: np.ndarray, targets: tuple[int, ...], n: int) -> np.ndarray:
    """Full 2^n operator of a local gate; targets[0] is the low bit of the local index."""
    dim = 1 << n
    full = np.zeros((dim, dim), dtype=np.complex128)
    for col in range(dim):
        local_col = sum(((col >> t) & 1) << k for k, t in enumerate(targets))
        for local_row in range(local.shape[0]):
            row = col
            for k, t in enumerate(targets):
                row = (row & ~(1 << t)) | (((local_row >> k) & 1) << t)
            full[row, col] += local[local_row, local_col]
    return full


def central_difference(f, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
    for i in np.ndindex(x.shape):
        plus, minus = x.copy(), x.copy()
        plus[i] += h
        minus[i] -= h
        grad[i] = (f(plus) - f(minus)) / (2 * h)
    return grad


def tensor_difference(loss, tensor, h: float = 1e-6) -> np.ndarray:
    """Central differences of `loss()` with respect to every entry of `tensor.data`, in place."""
    grad = np.zeros_like(tensor.data)
    for i in np.ndindex(tensor.shape):
        original = tensor.data[i]
        tensor.data[i] = original + h
        plus = loss()
        tensor.data[i] = original - h
        minus = loss()
        tensor.data[i] = original
        grad[i] = (plus - minus) / (2 * h)
    return grad


def random_qlayer_config(rng: np.random.Generator, n: int, fm_reps: int = 2, ansatz_reps: int = 1) -> QLayerConfig:
    return QLayerConfig(
        n_qubits=n,
        fm_reps=fm_reps,
        ansatz_reps=ansatz_reps,
        params=rng.uniform(-math.pi, math.pi, size=n * (ansatz_reps + 1)).tolist(),
    )


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(1234))


@pytest.fixture
def tiny_dataset(tmp_path):
    """16 volumes of 8^3 (12 train / 2 val / 2 test), trivially separable."""
    out = tmp_path / "data"
    generate_synthetic(out, n_per_class=8, side=8, seed=3, difficulty=0.0)
    return out / MANIFEST_NAME


def tiny_config(manifest, out_dir, **train) -> RunConfig:
    return RunConfig.model_validate(
        {
            "data": {"manifest": str(manifest), "out_dir": str(out_dir)},
            "net": {"input_side": 8, "channels": [2], "blocks_per_stage": 1},
            "qlayer": {"n_qubits": 2, "fm_reps": 1, "ansatz_reps": 1},
            "train": {
                "epochs": 2,
                "batch_size": 4,
                "learning_rate": 0.01,
                "seed": 7,
                "patience": 0,
                **train,
            },
        }
    )


@pytest.fixture
def tiny_run_config(tiny_dataset, tmp_path):
    return tiny_config(tiny_dataset, tmp_path / "run")


def write_run_toml(path, manifest, out_dir) -> str:
    """TOML twin of tiny_config(), for driving the command line."""
    path.write_text(
        "\n".join(
            [
                "[data]",
                f"manifest = '{manifest}'",
                f"out_dir = '{out_dir}'",
                "[net]",
                "input_side = 8",
                "channels = [2]",
                "[qlayer]",
                "n_qubits = 2",
                "fm_reps = 1",
                "[train]",
                "epochs = 2",
                "batch_size = 4",
                "learning_rate = 0.01",
                "seed = 7",
                "patience = 0",
                "",
            ]
        ),
        encoding="utf-8",
    )
    return str(path)
