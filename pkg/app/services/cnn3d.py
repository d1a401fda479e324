import logging
import math

import numpy as np

from app.errors import ArgumentError, StateError
from app.schemas.config import NetConfig
from app.services.layers import (
    Mode,
    batchnorm3d_backward,
    batchnorm3d_forward,
    conv3d_backward,
    conv3d_forward,
    dense_backward,
    dense_forward,
    relu_backward,
    relu_forward,
    sigmoid,
)
from app.services.tensor import Tensor

logger = logging.getLogger(__name__)


def he_uniform(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    fan_in = int(np.prod(shape[1:]))
    bound = math.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape)


def xavier_uniform(rng: np.random.Generator, shape: tuple[int, int]) -> np.ndarray:
    fan_out, fan_in = shape
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


class ConvBN:
    """Convolution followed by batch normalization."""

    def __init__(self, c_in: int, c_out: int, kernel: int, stride: int, rng: np.random.Generator):
        self.stride = stride
        self.weight = Tensor(he_uniform(rng, (c_out, c_in, kernel, kernel, kernel)))
        self.bias = Tensor(np.zeros(c_out))
        self.bn_scale = Tensor(np.ones(c_out))
        self.bn_offset = Tensor(np.zeros(c_out))
        self.running_mean = Tensor(np.zeros(c_out), trainable=False)
        self.running_var = Tensor(np.ones(c_out), trainable=False)
        self._caches = None

    def named_parameters(self, prefix: str) -> list[tuple[str, Tensor]]:
        return [
            (f"{prefix}.weight", self.weight),
            (f"{prefix}.bias", self.bias),
            (f"{prefix}.bn_scale", self.bn_scale),
            (f"{prefix}.bn_offset", self.bn_offset),
            (f"{prefix}.running_mean", self.running_mean),
            (f"{prefix}.running_var", self.running_var),
        ]

    def forward(self, x: np.ndarray, mode: Mode) -> np.ndarray:
        out, conv_cache = conv3d_forward(x, self.weight.data, self.bias.data, self.stride)
        out, bn_cache = batchnorm3d_forward(
            out,
            self.bn_scale.data,
            self.bn_offset.data,
            self.running_mean.data,
            self.running_var.data,
            mode,
        )
        self._caches = (conv_cache, bn_cache)
        return out

    def backward(self, d_out: np.ndarray) -> np.ndarray:
        if self._caches is None:
            raise StateError("backward called before forward")
        conv_cache, bn_cache = self._caches
        d_out, d_scale, d_offset = batchnorm3d_backward(d_out, bn_cache)
        self.bn_scale.grad += d_scale
        self.bn_offset.grad += d_offset
        d_x, d_weight, d_bias = conv3d_backward(d_out, conv_cache)
        self.weight.grad += d_weight
        self.bias.grad += d_bias
        return d_x


class ResidualBlock:
    """
    conv3-BN-ReLU, conv3-BN, plus the shortcut, then ReLU. The shortcut is the
    identity when shapes match and a strided 1x1x1 conv + BN otherwise.
    """

    def __init__(self, c_in: int, c_out: int, stride: int, rng: np.random.Generator):
        self.conv1 = ConvBN(c_in, c_out, 3, stride, rng)
        self.conv2 = ConvBN(c_out, c_out, 3, 1, rng)
        self.shortcut = (
            ConvBN(c_in, c_out, 1, stride, rng) if stride != 1 or c_in != c_out else None
        )
        self._masks = None

    def named_parameters(self, prefix: str) -> list[tuple[str, Tensor]]:
        params = self.conv1.named_parameters(f"{prefix}.conv1")
        params += self.conv2.named_parameters(f"{prefix}.conv2")
        if self.shortcut is not None:
            params += self.shortcut.named_parameters(f"{prefix}.shortcut")
        return params

    def forward(self, x: np.ndarray, mode: Mode) -> np.ndarray:
        out, mask1 = relu_forward(self.conv1.forward(x, mode))
        out = self.conv2.forward(out, mode)
        skip = x if self.shortcut is None else self.shortcut.forward(x, mode)
        out, mask2 = relu_forward(out + skip)
        self._masks = (mask1, mask2)
        return out

    def backward(self, d_out: np.ndarray) -> np.ndarray:
        if self._masks is None:
            raise StateError("backward called before forward")
        mask1, mask2 = self._masks
        d_sum = relu_backward(d_out, mask2)
        d_main = self.conv1.backward(relu_backward(self.conv2.backward(d_sum), mask1))
        d_skip = d_sum if self.shortcut is None else self.shortcut.backward(d_sum)
        return d_main + d_skip


def residual_block(x: np.ndarray, block: ResidualBlock, mode: Mode = "train") -> np.ndarray:
    return block.forward(x, mode)


class ResNet3D:
    """
    Stages of residual blocks, global average pooling, a dense layer to n_out and
    an elementwise sigmoid that squashes the features into (0, 1).
    """

    def __init__(self, cfg: NetConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.blocks: list[ResidualBlock] = []
        c_in = 1
        for stage, c_out in enumerate(cfg.channels):
            for b in range(cfg.blocks_per_stage):
                stride = 2 if stage > 0 and b == 0 else 1
                self.blocks.append(ResidualBlock(c_in, c_out, stride, rng))
                c_in = c_out
        self.dense_weight = Tensor(xavier_uniform(rng, (cfg.n_out, c_in)))
        self.dense_bias = Tensor(np.zeros(cfg.n_out))
        self._cache = None

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        params = []
        for i, block in enumerate(self.blocks):
            params += block.named_parameters(f"block{i}")
        params += [("dense.weight", self.dense_weight), ("dense.bias", self.dense_bias)]
        return params

    def forward(self, volumes: np.ndarray, mode: Mode = "eval") -> np.ndarray:
        side = self.cfg.input_side
        if volumes.ndim != 5 or volumes.shape[1:] != (1, side, side, side):
            raise ArgumentError(
                f"expected volumes of shape (N, 1, {side}, {side}, {side}), got {volumes.shape}"
            )
        out = np.asarray(volumes, dtype=np.float64)
        for block in self.blocks:
            out = block.forward(out, mode)
        spatial = out.shape[2:]
        pooled = out.mean(axis=(2, 3, 4))
        logits, dense_cache = dense_forward(pooled, self.dense_weight.data, self.dense_bias.data)
        features = sigmoid(logits)
        self._cache = (spatial, dense_cache, features)
        return features

    def backward(self, d_features: np.ndarray) -> None:
        if self._cache is None:
            raise StateError("net_backward called before a forward pass")
        spatial, dense_cache, features = self._cache
        d_logits = d_features * features * (1.0 - features)
        d_pooled, d_weight, d_bias = dense_backward(d_logits, dense_cache, self.dense_weight.data)
        self.dense_weight.grad += d_weight
        self.dense_bias.grad += d_bias

        count = int(np.prod(spatial))
        d_out = np.broadcast_to(
            (d_pooled / count)[:, :, None, None, None], d_pooled.shape + spatial
        ).copy()
        for block in reversed(self.blocks):
            d_out = block.backward(d_out)


def net_forward(volume_batch: np.ndarray, net: ResNet3D, mode: Mode = "eval") -> np.ndarray:
    return net.forward(volume_batch, mode)


def net_backward(d_features: np.ndarray, net: ResNet3D) -> None:
    net.backward(d_features)


class ClassicalHead:
    """Dense(n_out -> 1) + sigmoid: the purely classical baseline head."""

    kind = "classical"

    def __init__(self, n_in: int, rng: np.random.Generator):
        self.weight = Tensor(xavier_uniform(rng, (1, n_in)))
        self.bias = Tensor(np.zeros(1))
        self._cache = None

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        return [("head.weight", self.weight), ("head.bias", self.bias)]

    def forward(self, features: np.ndarray, map_fn=map) -> np.ndarray:
        logits, dense_cache = dense_forward(features, self.weight.data, self.bias.data)
        probs = sigmoid(logits[:, 0])
        self._cache = (dense_cache, probs)
        return probs

    def backward(self, d_probs: np.ndarray, map_fn=map) -> np.ndarray:
        if self._cache is None:
            raise StateError("ClassicalHead.backward called before forward")
        dense_cache, probs = self._cache
        d_logits = (d_probs * probs * (1.0 - probs))[:, None]
        d_features, d_weight, d_bias = dense_backward(d_logits, dense_cache, self.weight.data)
        self.weight.grad += d_weight
        self.bias.grad += d_bias
        return d_features
