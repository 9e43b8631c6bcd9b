"""Tensor primitives for the forward-pass engine.

Activations are float32; dot products accumulate in float64 so results are
deterministic across platforms within the stated tolerances. Spatial padding
follows the "same" convention: output size = ceil(input / stride), with the
extra pad row/column placed at the bottom/right.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ShapeError, WeightsError

DEFAULT_BN_EPSILON = 1e-3


def _same_pads(size: int, k: int, stride: int) -> tuple[int, int, int]:
    out = -(-size // stride)
    total = max((out - 1) * stride + k - size, 0)
    lo = total // 2
    return out, lo, total - lo


def conv2d(x: np.ndarray, kernel: np.ndarray, stride: int = 1) -> np.ndarray:
    """Cross-correlate (H, W, Cin) input with a (kh, kw, Cin, Cout) kernel."""
    if x.ndim != 3 or kernel.ndim != 4:
        raise ShapeError(f"conv2d expects 3-D input and 4-D kernel, got {x.shape} and {kernel.shape}")
    kh, kw, c_in, c_out = kernel.shape
    if x.shape[2] != c_in:
        raise ShapeError(f"input channels {x.shape} do not match kernel {kernel.shape}")

    if kh == 1 and kw == 1 and stride == 1:
        flat = x.reshape(-1, c_in).astype(np.float64) @ kernel.reshape(c_in, c_out).astype(np.float64)
        return flat.reshape(x.shape[0], x.shape[1], c_out).astype(np.float32)

    h_out, pt, pb = _same_pads(x.shape[0], kh, stride)
    w_out, pl, pr = _same_pads(x.shape[1], kw, stride)
    padded = np.pad(x, ((pt, pb), (pl, pr), (0, 0)))
    windows = sliding_window_view(padded, (kh, kw), axis=(0, 1))[::stride, ::stride]
    cols = windows.reshape(h_out * w_out, c_in * kh * kw).astype(np.float64)
    kmat = kernel.transpose(2, 0, 1, 3).reshape(c_in * kh * kw, c_out).astype(np.float64)
    return (cols @ kmat).reshape(h_out, w_out, c_out).astype(np.float32)


def depthwise_conv2d(x: np.ndarray, kernel: np.ndarray, stride: int = 1) -> np.ndarray:
    """Per-channel spatial correlation with a (kh, kw, C) kernel; no mixing."""
    if x.ndim != 3 or kernel.ndim != 3:
        raise ShapeError(
            f"depthwise_conv2d expects 3-D input and 3-D kernel, got {x.shape} and {kernel.shape}"
        )
    kh, kw, ch = kernel.shape
    if x.shape[2] != ch:
        raise ShapeError(f"input channels {x.shape} do not match kernel {kernel.shape}")
    _, pt, pb = _same_pads(x.shape[0], kh, stride)
    _, pl, pr = _same_pads(x.shape[1], kw, stride)
    padded = np.pad(x, ((pt, pb), (pl, pr), (0, 0)))
    windows = sliding_window_view(padded, (kh, kw), axis=(0, 1))[::stride, ::stride]
    out = np.einsum(
        "hwcij,ijc->hwc", windows.astype(np.float64), kernel.astype(np.float64), optimize=True
    )
    return out.astype(np.float32)


def batchnorm_fold(
    kernel: np.ndarray,
    gamma: np.ndarray,
    beta: np.ndarray,
    mean: np.ndarray,
    var: np.ndarray,
    epsilon: float = DEFAULT_BN_EPSILON,
) -> tuple[np.ndarray, np.ndarray]:
    """Fold batch-norm into the preceding kernel.

    conv(x, folded) + bias == gamma * (conv(x, kernel) - mean) / sqrt(var + eps) + beta.
    The channel axis is the kernel's last axis for both regular (kh, kw, in,
    out) and depthwise (kh, kw, C) layouts.
    """
    if np.any(var <= 0):
        raise WeightsError("batch-norm variance must be positive for every channel")
    scale = gamma.astype(np.float64) / np.sqrt(var.astype(np.float64) + epsilon)
    folded = (kernel.astype(np.float64) * scale).astype(np.float32)
    bias = (beta.astype(np.float64) - mean.astype(np.float64) * scale).astype(np.float32)
    return folded, bias


def relu6(x: np.ndarray) -> np.ndarray:
    return np.clip(x, 0.0, 6.0)


def dense(x: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Affine map of a flat feature vector; float64 accumulation."""
    if x.ndim != 1 or weight.ndim != 2 or x.shape[0] != weight.shape[0]:
        raise ShapeError(f"dense got features {x.shape} and weight {weight.shape}")
    return x.astype(np.float64) @ weight.astype(np.float64) + bias.astype(np.float64)


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits.astype(np.float64)
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()
