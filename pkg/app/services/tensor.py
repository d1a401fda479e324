import numpy as np


class Tensor:
    """An n-dimensional float64 array with a gradient buffer of the same shape."""

    def __init__(self, data, trainable: bool = True):
        self.data = np.array(data, dtype=np.float64)
        self.trainable = trainable
        self.grad = np.zeros_like(self.data) if trainable else None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def zero_grad(self) -> None:
        if self.grad is not None:
            self.grad.fill(0.0)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, trainable={self.trainable})"
