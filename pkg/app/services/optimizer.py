import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from app.errors import StateError
from app.schemas.config import TrainConfig
from app.services.tensor import Tensor

logger = logging.getLogger(__name__)

PROB_CLIP = 1e-7


def bce_loss(p, y):
    """Binary cross-entropy on probabilities clipped to [1e-7, 1 - 1e-7]."""
    p = np.clip(p, PROB_CLIP, 1.0 - PROB_CLIP)
    return -(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))


def bce_grad(p, y):
    """dL/dp evaluated at the clipped probability."""
    p = np.clip(p, PROB_CLIP, 1.0 - PROB_CLIP)
    return (p - y) / (p * (1.0 - p))


@dataclass
class TrainState:
    params: list[Tensor]
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)
    step: int = 0
    epoch: int = 0
    best_val_auc: float | None = None
    best_val_loss: float | None = None
    best_checkpoint: Path | None = None
    bad_epochs: int = 0

    def __post_init__(self):
        if not self.m:
            self.m = [np.zeros_like(p.data) for p in self.params]
        if not self.v:
            self.v = [np.zeros_like(p.data) for p in self.params]
        for p, m, v in zip(self.params, self.m, self.v):
            if m.shape != p.shape or v.shape != p.shape:
                raise StateError(
                    f"moment buffers {m.shape}/{v.shape} do not match parameter {p.shape}"
                )

    @classmethod
    def for_parameters(cls, params: Sequence[Tensor]) -> "TrainState":
        return cls(params=list(params))


def adam_step(
    state: TrainState,
    gradients: Sequence[np.ndarray | None],
    cfg: TrainConfig,
) -> TrainState:
    """Bias-corrected Adam update, in place on the parameters and moments."""
    if len(gradients) != len(state.params):
        raise StateError(
            f"got {len(gradients)} gradient buffers for {len(state.params)} parameters"
        )
    for i, grad in enumerate(gradients):
        if grad is None:
            raise StateError(f"parameter {i} has no gradient buffer")

    state.step += 1
    t = state.step
    correction1 = 1.0 - cfg.beta1**t
    correction2 = 1.0 - cfg.beta2**t
    for param, m, v, grad in zip(state.params, state.m, state.v, gradients):
        m *= cfg.beta1
        m += (1.0 - cfg.beta1) * grad
        v *= cfg.beta2
        v += (1.0 - cfg.beta2) * grad * grad
        m_hat = m / correction1
        v_hat = v / correction2
        param.data -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.eps_adam)
    return state


def all_finite(values: Sequence[np.ndarray]) -> bool:
    return all(np.all(np.isfinite(v)) for v in values)
