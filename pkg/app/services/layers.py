"""
Functional 3D layers with explicit forward/backward passes.

Arrays are laid out (N, C, D, H, W). Every `*_forward` returns the output and a
cache; the matching `*_backward` consumes the cache and returns input and
parameter gradients.
"""

import logging
from typing import Literal

import numpy as np

from app.errors import ArgumentError

logger = logging.getLogger(__name__)

Mode = Literal["train", "eval"]

BN_EPS = 1e-5
BN_MOMENTUM = 0.1


def _out_side(side: int, stride: int) -> int:
    return -(-side // stride)


def _window(kd: int, kh: int, kw: int, out_shape, stride: int):
    d, h, w = out_shape
    return (
        slice(None),
        slice(None),
        slice(kd, kd + stride * (d - 1) + 1, stride),
        slice(kh, kh + stride * (h - 1) + 1, stride),
        slice(kw, kw + stride * (w - 1) + 1, stride),
    )


def conv3d_forward(x: np.ndarray, weight: np.ndarray, bias: np.ndarray, stride: int = 1):
    if x.ndim != 5 or weight.ndim != 5:
        raise ArgumentError(
            f"conv3d expects 5-D input and weight, got {x.shape} and {weight.shape}"
        )
    c_out, c_in, k, k1, k2 = weight.shape
    if x.shape[1] != c_in or not k == k1 == k2 or k % 2 == 0:
        raise ArgumentError(
            f"conv3d shape mismatch: input {x.shape}, weight {weight.shape}"
        )
    if bias.shape != (c_out,):
        raise ArgumentError(f"conv3d bias shape {bias.shape} != ({c_out},)")
    if stride not in (1, 2):
        raise ArgumentError(f"conv3d stride must be 1 or 2, got {stride}")

    pad = k // 2
    n = x.shape[0]
    out_shape = tuple(_out_side(s, stride) for s in x.shape[2:])
    padded = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad), (pad, pad)))

    # (N, C_in, k^3, D', H', W'), kernel offsets in row-major (kd, kh, kw) order
    cols = np.stack(
        [
            padded[_window(kd, kh, kw, out_shape, stride)]
            for kd in range(k)
            for kh in range(k)
            for kw in range(k)
        ],
        axis=2,
    ).reshape(n, c_in * k**3, -1)

    out = np.matmul(weight.reshape(c_out, -1), cols)
    out += bias[None, :, None]
    out = out.reshape(n, c_out, *out_shape)
    cache = (x.shape, padded.shape, cols, weight, stride, out_shape)
    return out, cache


def conv3d_backward(d_out: np.ndarray, cache):
    x_shape, padded_shape, cols, weight, stride, out_shape = cache
    c_out, c_in, k = weight.shape[:3]
    n = d_out.shape[0]
    pad = k // 2

    d_flat = d_out.reshape(n, c_out, -1)
    d_weight = np.matmul(d_flat, cols.transpose(0, 2, 1)).sum(axis=0).reshape(weight.shape)
    d_bias = d_flat.sum(axis=(0, 2))

    d_cols = np.matmul(weight.reshape(c_out, -1).T, d_flat)
    d_cols = d_cols.reshape(n, c_in, k**3, *out_shape)
    d_padded = np.zeros(padded_shape)
    offset = 0
    for kd in range(k):
        for kh in range(k):
            for kw in range(k):
                d_padded[_window(kd, kh, kw, out_shape, stride)] += d_cols[:, :, offset]
                offset += 1

    d_x = d_padded[:, :, pad : pad + x_shape[2], pad : pad + x_shape[3], pad : pad + x_shape[4]]
    return np.ascontiguousarray(d_x), d_weight, d_bias


def conv3d(x: np.ndarray, weight: np.ndarray, bias: np.ndarray, stride: int = 1) -> np.ndarray:
    """Zero-padded cross-correlation, output side ceil(side / stride)."""
    return conv3d_forward(x, weight, bias, stride)[0]


def batchnorm3d_forward(
    x: np.ndarray,
    scale: np.ndarray,
    offset: np.ndarray,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    mode: Mode,
    momentum: float = BN_MOMENTUM,
    eps: float = BN_EPS,
):
    """
    Per-channel normalization. Train mode uses batch statistics and updates the
    running statistics in place (unbiased variance); eval mode uses the running
    statistics.
    """
    axes = (0, 2, 3, 4)
    shape = (1, -1, 1, 1, 1)
    if mode == "train":
        if x.shape[0] < 2:
            raise ArgumentError(
                f"batchnorm3d in train mode needs a batch of at least 2, got {x.shape[0]}"
            )
        mean = x.mean(axis=axes)
        var = x.var(axis=axes)
        count = x.size // x.shape[1]
        running_mean *= 1.0 - momentum
        running_mean += momentum * mean
        running_var *= 1.0 - momentum
        running_var += momentum * var * count / (count - 1)
    elif mode == "eval":
        mean, var = running_mean.copy(), running_var.copy()
    else:
        raise ArgumentError(f"unknown batchnorm mode {mode!r}")

    inv_std = 1.0 / np.sqrt(var + eps)
    x_hat = (x - mean.reshape(shape)) * inv_std.reshape(shape)
    out = scale.reshape(shape) * x_hat + offset.reshape(shape)
    return out, (x_hat, inv_std, scale, mode)


def batchnorm3d_backward(d_out: np.ndarray, cache):
    x_hat, inv_std, scale, mode = cache
    axes = (0, 2, 3, 4)
    shape = (1, -1, 1, 1, 1)
    d_scale = (d_out * x_hat).sum(axis=axes)
    d_offset = d_out.sum(axis=axes)
    d_hat = d_out * scale.reshape(shape)
    if mode == "eval":
        return d_hat * inv_std.reshape(shape), d_scale, d_offset

    count = d_out.size // d_out.shape[1]
    d_x = (inv_std.reshape(shape) / count) * (
        count * d_hat
        - d_hat.sum(axis=axes).reshape(shape)
        - x_hat * (d_hat * x_hat).sum(axis=axes).reshape(shape)
    )
    return d_x, d_scale, d_offset


def batchnorm3d(
    x: np.ndarray,
    scale: np.ndarray,
    offset: np.ndarray,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    mode: Mode,
    momentum: float = BN_MOMENTUM,
    eps: float = BN_EPS,
) -> np.ndarray:
    return batchnorm3d_forward(
        x, scale, offset, running_mean, running_var, mode, momentum, eps
    )[0]


def relu_forward(x: np.ndarray):
    mask = x > 0
    return x * mask, mask


def relu_backward(d_out: np.ndarray, mask: np.ndarray) -> np.ndarray:
    return d_out * mask


def sigmoid(z: np.ndarray) -> np.ndarray:
    # split by sign to avoid overflow in exp
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    e = np.exp(z[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def dense_forward(x: np.ndarray, weight: np.ndarray, bias: np.ndarray):
    """x (N, in) @ weight.T (in, out) + bias."""
    if x.ndim != 2 or weight.shape[1] != x.shape[1]:
        raise ArgumentError(f"dense shape mismatch: input {x.shape}, weight {weight.shape}")
    return x @ weight.T + bias, x


def dense_backward(d_out: np.ndarray, x: np.ndarray, weight: np.ndarray):
    return d_out @ weight, d_out.T @ x, d_out.sum(axis=0)
