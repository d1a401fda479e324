"""
Builders for the two sub-circuits of the quantum layer: the ZZ feature map that
encodes a feature vector and the real-amplitudes ansatz that carries the
trainable parameters.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

from app.errors import ArgumentError, FormatError, QubitIndexError
from app.services.statevector import (
    MAX_QUBITS,
    Gate,
    GateKind,
    StateVector,
    apply_gates,
    cx,
    h,
    init_state,
    ry,
    rz,
    zz,
)

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple[Gate, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise ArgumentError(
                f"n_qubits must be between 1 and {MAX_QUBITS}, got {self.n_qubits}"
            )
        object.__setattr__(self, "gates", tuple(self.gates))
        for gate in self.gates:
            for t in gate.targets:
                if t >= self.n_qubits:
                    raise QubitIndexError(
                        f"{gate.kind.value} targets qubit {t} "
                        f"but the circuit has {self.n_qubits} qubits"
                    )

    def __add__(self, other: "Circuit") -> "Circuit":
        if other.n_qubits != self.n_qubits:
            raise ArgumentError(
                f"cannot join circuits on {self.n_qubits} and {other.n_qubits} qubits"
            )
        return Circuit(self.n_qubits, self.gates + other.gates)

    def with_angle(self, index: int, angle: float) -> "Circuit":
        """Copy with the angle of gate `index` replaced."""
        gates = list(self.gates)
        gates[index] = replace(gates[index], angle=angle)
        return Circuit(self.n_qubits, gates)

    def run(self, state: StateVector | None = None) -> StateVector:
        return apply_gates(state or init_state(self.n_qubits), self.gates)


def num_ansatz_params(n_qubits: int, reps: int) -> int:
    return n_qubits * (reps + 1)


def build_zz_feature_map(x: Sequence[float], reps: int = 2) -> Circuit:
    n = len(x)
    if n < 1:
        raise ArgumentError("feature vector must not be empty")
    if reps < 1:
        raise ArgumentError(f"reps must be positive, got {reps}")
    x = [float(v) for v in x]
    for i, value in enumerate(x):
        if not abs(value) <= TWO_PI:
            raise ArgumentError(f"feature {i} = {value} is outside [-2π, 2π]")

    gates = []
    for _ in range(reps):
        gates.extend(h(i) for i in range(n))
        gates.extend(rz(i, 2.0 * x[i]) for i in range(n))
        for i in range(n):
            for j in range(i + 1, n):
                gates.append(zz(i, j, x[i] * (TWO_PI - x[j])))
    return Circuit(n, gates)


def encoding_partials(
    x: Sequence[float], reps: int = 2
) -> list[tuple[int, tuple[tuple[int, float], ...]]]:
    """
    For every angle-carrying gate of build_zz_feature_map(x, reps), in circuit
    order: (gate index, ((feature index, d angle / d feature), ...)).
    """
    n = len(x)
    per_rep = n + n + n * (n - 1) // 2
    partials = []
    for r in range(reps):
        index = r * per_rep + n
        for i in range(n):
            partials.append((index, ((i, 2.0),)))
            index += 1
        for i in range(n):
            for j in range(i + 1, n):
                partials.append((index, ((i, TWO_PI - x[j]), (j, -x[i]))))
                index += 1
    return partials


def build_real_amplitudes(n_qubits: int, reps: int, phi: Sequence[float]) -> Circuit:
    expected = num_ansatz_params(n_qubits, reps)
    if len(phi) != expected:
        raise ArgumentError(
            f"real-amplitudes ansatz on {n_qubits} qubits with {reps} rep(s) "
            f"expects {expected} parameters, got {len(phi)}"
        )

    gates = [ry(i, phi[i]) for i in range(n_qubits)]
    for r in range(1, reps + 1):
        gates.extend(cx(i, i + 1) for i in range(n_qubits - 1))
        gates.extend(ry(i, phi[r * n_qubits + i]) for i in range(n_qubits))
    return Circuit(n_qubits, gates)


def decompose_zz(circuit: Circuit) -> Circuit:
    """Replace every ZZ(θ) on (i, j) with CX(i, j) · RZ(θ) on j · CX(i, j)."""
    gates = []
    for gate in circuit.gates:
        if gate.kind is GateKind.ZZ:
            i, j = gate.targets
            gates.extend([cx(i, j), rz(j, gate.angle), cx(i, j)])
        else:
            gates.append(gate)
    return Circuit(circuit.n_qubits, gates)


def format_gate(gate: Gate) -> str:
    angle = "-" if gate.angle is None else f"{gate.angle:.17g}"
    targets = " ".join(str(t) for t in gate.targets)
    return f"{gate.kind.value} {angle} {targets}"


def format_circuit(circuit: Circuit) -> str:
    lines = [f"qubits {circuit.n_qubits}"]
    lines.extend(format_gate(g) for g in circuit.gates)
    return "\n".join(lines) + "\n"


def parse_circuit(text: str) -> Circuit:
    n_qubits = None
    gates = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if n_qubits is None:
                if parts[0].lower() != "qubits" or len(parts) != 2:
                    raise FormatError(f"line {lineno}: expected 'qubits N' header")
                n_qubits = int(parts[1])
                continue
            if len(parts) < 3:
                raise FormatError(f"line {lineno}: expected 'KIND angle targets'")
            angle = None if parts[1] == "-" else float(parts[1])
            gate = Gate(GateKind(parts[0].upper()), tuple(parts[2:]), angle)
            if any(t >= n_qubits for t in gate.targets):
                raise FormatError(f"line {lineno}: qubit out of range in {gate.targets}")
            gates.append(gate)
        except FormatError:
            raise
        except (ValueError, IndexError) as e:
            raise FormatError(f"line {lineno}: {e}") from e

    if n_qubits is None:
        raise FormatError("circuit text has no 'qubits N' header")
    return Circuit(n_qubits, gates)
