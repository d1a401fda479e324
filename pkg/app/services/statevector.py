"""
Dense statevector simulation.

Qubit 0 is the least-significant bit of the amplitude index. Gates are applied
functionally: every call returns a new StateVector and leaves its input intact.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from app.errors import ArgumentError, CapacityError, QubitIndexError

logger = logging.getLogger(__name__)

MAX_QUBITS = 20


class GateKind(str, Enum):
    H = "H"
    RY = "RY"
    RZ = "RZ"
    CX = "CX"
    ZZ = "ZZ"


_ROTATIONS = {GateKind.RY, GateKind.RZ, GateKind.ZZ}
_TWO_QUBIT = {GateKind.CX, GateKind.ZZ}


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    targets: tuple[int, ...]
    angle: float | None = None

    def __post_init__(self):
        kind = GateKind(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))

        arity = 2 if kind in _TWO_QUBIT else 1
        if len(self.targets) != arity:
            raise ArgumentError(
                f"{kind.value} takes {arity} target(s), got {len(self.targets)}"
            )
        if any(t < 0 for t in self.targets):
            raise QubitIndexError(f"negative qubit index in {self.targets}")
        if arity == 2 and self.targets[0] == self.targets[1]:
            raise ArgumentError(
                f"{kind.value} needs two distinct qubits, got {self.targets}"
            )
        if kind in _ROTATIONS:
            if self.angle is None:
                raise ArgumentError(f"{kind.value} requires an angle")
            object.__setattr__(self, "angle", float(self.angle))
        elif self.angle is not None:
            raise ArgumentError(f"{kind.value} takes no angle")

    def inverse(self) -> "Gate":
        if self.angle is None:
            return self
        return Gate(self.kind, self.targets, -self.angle)


def h(q: int) -> Gate:
    return Gate(GateKind.H, (q,))


def ry(q: int, theta: float) -> Gate:
    return Gate(GateKind.RY, (q,), theta)


def rz(q: int, theta: float) -> Gate:
    return Gate(GateKind.RZ, (q,), theta)


def cx(control: int, target: int) -> Gate:
    return Gate(GateKind.CX, (control, target))


def zz(i: int, j: int, theta: float) -> Gate:
    return Gate(GateKind.ZZ, (i, j), theta)


class StateVector:
    def __init__(self, n_qubits: int, amplitudes: np.ndarray):
        amplitudes = np.asarray(amplitudes, dtype=np.complex128)
        if amplitudes.shape != (1 << n_qubits,):
            raise ArgumentError(
                f"expected {1 << n_qubits} amplitudes for {n_qubits} qubits, "
                f"got shape {amplitudes.shape}"
            )
        self.n_qubits = n_qubits
        self.amplitudes = amplitudes

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2)))

    def copy(self) -> "StateVector":
        return StateVector(self.n_qubits, self.amplitudes.copy())

    def __repr__(self) -> str:
        return f"StateVector(n_qubits={self.n_qubits})"


def init_state(n_qubits: int) -> StateVector:
    """Prepare |0...0>."""
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise CapacityError(
            f"n_qubits must be between 1 and {MAX_QUBITS}, got {n_qubits}"
        )
    amplitudes = np.zeros(1 << n_qubits, dtype=np.complex128)
    amplitudes[0] = 1.0
    return StateVector(n_qubits, amplitudes)


@lru_cache(maxsize=None)
def _basis_indices(n_qubits: int) -> np.ndarray:
    indices = np.arange(1 << n_qubits, dtype=np.int64)
    indices.setflags(write=False)
    return indices


@lru_cache(maxsize=None)
def _parity_signs(n_qubits: int) -> np.ndarray:
    indices = _basis_indices(n_qubits)
    parity = np.zeros_like(indices)
    for bit in range(n_qubits):
        parity ^= (indices >> bit) & 1
    signs = (1 - 2 * parity).astype(np.float64)
    signs.setflags(write=False)
    return signs


def gate_matrix(gate: Gate) -> np.ndarray:
    """Local unitary of a gate: 2x2, or 4x4 over (q_second q_first) bit pairs."""
    if gate.kind is GateKind.H:
        return np.array([[1, 1], [1, -1]], dtype=np.complex128) / math.sqrt(2)
    if gate.kind is GateKind.RY:
        c, s = math.cos(gate.angle / 2), math.sin(gate.angle / 2)
        return np.array([[c, -s], [s, c]], dtype=np.complex128)
    if gate.kind is GateKind.RZ:
        phase = np.exp(-0.5j * gate.angle)
        return np.diag([phase, np.conj(phase)])
    if gate.kind is GateKind.ZZ:
        phase = np.exp(-0.5j * gate.angle)
        return np.diag([phase, np.conj(phase), np.conj(phase), phase])
    # CX with the control as the low bit of the local 2-bit index
    return np.array(
        [[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]],
        dtype=np.complex128,
    )


def _apply_single(amps: np.ndarray, matrix: np.ndarray, q: int) -> np.ndarray:
    view = amps.reshape(-1, 2, 1 << q)
    a0, a1 = view[:, 0, :], view[:, 1, :]
    out = np.empty_like(view)
    out[:, 0, :] = matrix[0, 0] * a0 + matrix[0, 1] * a1
    out[:, 1, :] = matrix[1, 0] * a0 + matrix[1, 1] * a1
    return out.reshape(-1)


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    n = state.n_qubits
    for t in gate.targets:
        if t >= n:
            raise QubitIndexError(
                f"qubit {t} out of range for a {n}-qubit state ({gate.kind.value})"
            )

    amps = state.amplitudes
    kind = gate.kind
    if kind is GateKind.RZ:
        q = gate.targets[0]
        bits = (_basis_indices(n) >> q) & 1
        phase = np.exp(-0.5j * gate.angle)
        out = amps * np.where(bits == 1, np.conj(phase), phase)
    elif kind is GateKind.ZZ:
        i, j = gate.targets
        indices = _basis_indices(n)
        odd = ((indices >> i) ^ (indices >> j)) & 1
        phase = np.exp(-0.5j * gate.angle)
        out = amps * np.where(odd == 1, np.conj(phase), phase)
    elif kind is GateKind.CX:
        control, target = gate.targets
        indices = _basis_indices(n)
        out = amps[indices ^ (((indices >> control) & 1) << target)]
    else:
        out = _apply_single(amps, gate_matrix(gate), gate.targets[0])
    return StateVector(n, out)


def apply_gates(state: StateVector, gates) -> StateVector:
    for gate in gates:
        state = apply_gate(state, gate)
    return state


def expect_z_parity(state: StateVector) -> float:
    """Expectation of Z⊗Z⊗...⊗Z."""
    probabilities = np.abs(state.amplitudes) ** 2
    value = float(np.dot(_parity_signs(state.n_qubits), probabilities))
    return min(1.0, max(-1.0, value))


def format_amplitudes(state: StateVector) -> str:
    lines = [
        f"{index}\t{amp.real:.17g}\t{amp.imag:.17g}"
        for index, amp in enumerate(state.amplitudes)
    ]
    return "\n".join(lines)
