import logging
import math
from typing import Callable, Iterable, Sequence

import numpy as np

from app.errors import ArgumentError, StateError
from app.schemas.config import QLayerConfig, QLayerSettings
from app.services.circuits import (
    Circuit,
    build_real_amplitudes,
    build_zz_feature_map,
    encoding_partials,
    num_ansatz_params,
)
from app.services.statevector import GateKind, StateVector, expect_z_parity
from app.services.tensor import Tensor

logger = logging.getLogger(__name__)

SHIFT = math.pi / 2


def _check_features(features: Sequence[float], cfg: QLayerConfig) -> list[float]:
    values = [float(v) for v in features]
    if len(values) != cfg.n_qubits:
        raise ArgumentError(
            f"quantum layer has {cfg.n_qubits} qubits but got {len(values)} features"
        )
    return values


def _probability(state: StateVector) -> float:
    return 0.5 * (1.0 + expect_z_parity(state))


def _ansatz(cfg: QLayerConfig) -> Circuit:
    return build_real_amplitudes(cfg.n_qubits, cfg.ansatz_reps, cfg.params)


def _shift_derivative(circuit: Circuit, index: int, start: StateVector | None = None) -> float:
    angle = circuit.gates[index].angle
    plus = _probability(circuit.with_angle(index, angle + SHIFT).run(start))
    minus = _probability(circuit.with_angle(index, angle - SHIFT).run(start))
    return 0.5 * (plus - minus)


def qlayer_forward(features: Sequence[float], cfg: QLayerConfig) -> float:
    """Class probability (1 + <Z⊗...⊗Z>) / 2 after feature map and ansatz."""
    x = _check_features(features, cfg)
    circuit = build_zz_feature_map(x, cfg.fm_reps) + _ansatz(cfg)
    return _probability(circuit.run())


def qlayer_grad_params(features: Sequence[float], cfg: QLayerConfig) -> np.ndarray:
    x = _check_features(features, cfg)
    encoded = build_zz_feature_map(x, cfg.fm_reps).run()
    ansatz = _ansatz(cfg)
    ry_indices = [i for i, g in enumerate(ansatz.gates) if g.kind is GateKind.RY]

    grads = np.zeros(len(cfg.params))
    for k, index in enumerate(ry_indices):
        grads[k] = _shift_derivative(ansatz, index, encoded)
    return grads


def qlayer_grad_features(features: Sequence[float], cfg: QLayerConfig) -> np.ndarray:
    """
    Chain rule through the encoding angles: every RZ(2 x_i) and
    ZZ(x_i (2π - x_j)) angle is differentiated by parameter shift and weighted
    by its partial derivatives with respect to the features.
    """
    x = _check_features(features, cfg)
    circuit = build_zz_feature_map(x, cfg.fm_reps) + _ansatz(cfg)

    grads = np.zeros(cfg.n_qubits)
    for index, partials in encoding_partials(x, cfg.fm_reps):
        d_angle = _shift_derivative(circuit, index)
        for feature, partial in partials:
            grads[feature] += partial * d_angle
    return grads


class QuantumHead:
    """Trainable quantum classification head over a batch of feature vectors."""

    kind = "quantum"

    def __init__(self, qcfg: QLayerSettings, rng: np.random.Generator):
        self.settings = qcfg
        size = num_ansatz_params(qcfg.n_qubits, qcfg.ansatz_reps)
        self.params = Tensor(rng.uniform(-math.pi, math.pi, size=size))
        self._features: np.ndarray | None = None

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        return [("head.params", self.params)]

    def config(self) -> QLayerConfig:
        return QLayerConfig(
            **self.settings.model_dump(), params=self.params.data.tolist()
        )

    def forward(
        self, features: np.ndarray, map_fn: Callable[..., Iterable] = map
    ) -> np.ndarray:
        cfg = self.config()
        self._features = features
        probs = map_fn(lambda f: qlayer_forward(f, cfg), list(features))
        return np.fromiter(probs, dtype=np.float64, count=len(features))

    def backward(
        self, d_probs: np.ndarray, map_fn: Callable[..., Iterable] = map
    ) -> np.ndarray:
        if self._features is None:
            raise StateError("QuantumHead.backward called before forward")
        cfg = self.config()

        def sample_grads(f):
            return qlayer_grad_params(f, cfg), qlayer_grad_features(f, cfg)

        d_features = np.zeros_like(self._features)
        # consumed in sample order so the reduction is reproducible
        for n, (g_params, g_features) in enumerate(
            map_fn(sample_grads, list(self._features))
        ):
            self.params.grad += d_probs[n] * g_params
            d_features[n] = d_probs[n] * g_features
        return d_features
