import logging
from typing import Callable, Iterable, Protocol

import numpy as np

from app.errors import ArgumentError
from app.schemas.config import HeadKind, NetConfig, QLayerSettings
from app.services.cnn3d import ClassicalHead, ResNet3D
from app.services.layers import Mode
from app.services.qlayer import QuantumHead
from app.services.tensor import Tensor

logger = logging.getLogger(__name__)


class Head(Protocol):
    kind: str

    def named_parameters(self) -> list[tuple[str, Tensor]]: ...

    def forward(self, features: np.ndarray, map_fn: Callable[..., Iterable] = map) -> np.ndarray: ...

    def backward(self, d_probs: np.ndarray, map_fn: Callable[..., Iterable] = map) -> np.ndarray: ...


class QResNet:
    """3D residual front-end feeding a quantum or classical classification head."""

    def __init__(
        self,
        net_cfg: NetConfig,
        qlayer_cfg: QLayerSettings,
        head: HeadKind,
        seed: int,
    ):
        rng = np.random.Generator(np.random.PCG64(seed))
        self.net = ResNet3D(net_cfg, rng)
        head = HeadKind(head)
        if head is HeadKind.quantum:
            if net_cfg.n_out != qlayer_cfg.n_qubits:
                raise ArgumentError(
                    f"net.n_out ({net_cfg.n_out}) must equal n_qubits ({qlayer_cfg.n_qubits})"
                )
            self.head: Head = QuantumHead(qlayer_cfg, rng)
        else:
            self.head = ClassicalHead(net_cfg.n_out, rng)
        self.map_fn: Callable[..., Iterable] = map

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        """Every tensor in declaration order, running statistics included."""
        return self.net.named_parameters() + self.head.named_parameters()

    def trainable_parameters(self) -> list[tuple[str, Tensor]]:
        return [(name, t) for name, t in self.named_parameters() if t.trainable]

    def zero_grad(self) -> None:
        for _, tensor in self.named_parameters():
            tensor.zero_grad()

    def forward(self, volumes: np.ndarray, mode: Mode = "eval") -> np.ndarray:
        features = self.net.forward(volumes, mode)
        return self.head.forward(features, self.map_fn)

    def backward(self, d_probs: np.ndarray) -> None:
        d_features = self.head.backward(d_probs, self.map_fn)
        self.net.backward(d_features)

    def predict(self, volumes: np.ndarray, batch_size: int = 8) -> np.ndarray:
        """Eval-mode class probabilities, batch by batch."""
        chunks = [
            self.forward(volumes[i : i + batch_size], "eval")
            for i in range(0, len(volumes), batch_size)
        ]
        return np.concatenate(chunks) if chunks else np.zeros(0)
