"""Laplacian-of-Gaussian sharpness scoring and frame-selection strategies."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .dataio import FrameSequence
from .errors import EmptySequenceError, ParameterError
from .imaging import GrayFrame

#: Default LoG scale. Conventional for iris focus assessment; configurable.
DEFAULT_LOG_SIGMA = 1.4

#: Normalization constant mapping raw power to a bounded [0, 100) score.
#: Any positive constant preserves the rank ordering used for selection.
DEFAULT_NORM_CONSTANT = 1800.0


@dataclass(frozen=True)
class SharpnessScore:
    """Focus measure: mean squared LoG response, plus a bounded score.

    ``normalized`` = 100 * raw / (raw + c), monotone in ``raw_power`` and
    always in [0, 100).
    """

    raw_power: float
    normalized: float


def log_kernel(sigma: float) -> np.ndarray:
    """Sampled Laplacian-of-Gaussian kernel, shifted to exactly zero mean.

    Radius is ceil(3*sigma); the zero-mean shift makes the filter annihilate
    constant images regardless of sampling truncation.
    """
    if sigma <= 0:
        raise ParameterError(f"sigma must be > 0, got {sigma}")
    radius = math.ceil(3.0 * sigma)
    ax = np.arange(-radius, radius + 1, dtype=np.float64)
    xx, yy = np.meshgrid(ax, ax)
    r2 = xx * xx + yy * yy
    s2 = sigma * sigma
    k = -1.0 / (math.pi * s2 * s2) * (1.0 - r2 / (2.0 * s2)) * np.exp(-r2 / (2.0 * s2))
    return k - k.mean()


def _correlate_reflect(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """2-D cross-correlation with mirrored (edge-repeating) borders."""
    r = (kernel.shape[0] - 1) // 2
    padded = np.pad(img, r, mode="symmetric")
    windows = np.lib.stride_tricks.sliding_window_view(padded, kernel.shape)
    return np.einsum("hwij,ij->hw", windows, kernel, optimize=True)


def log_response(frame: GrayFrame, sigma: float = DEFAULT_LOG_SIGMA) -> np.ndarray:
    """Convolve the intensity image with the zero-mean LoG kernel.

    The kernel is symmetric, so correlation and convolution coincide.
    Returns a float64 response map of the same shape as the frame.
    """
    kernel = log_kernel(sigma)
    return _correlate_reflect(frame.pixels.astype(np.float64), kernel)


def sharpness(
    frame: GrayFrame,
    sigma: float = DEFAULT_LOG_SIGMA,
    norm_constant: float = DEFAULT_NORM_CONSTANT,
) -> SharpnessScore:
    """Score focus as the power of the LoG-filtered image.

    The frame mean is removed before filtering. Against the zero-mean kernel
    this is a mathematical no-op, but it pins constant frames to an exact
    zero score instead of accumulated rounding dust.
    """
    pixels = frame.pixels.astype(np.float64)
    centered = pixels - pixels.mean()
    response = _correlate_reflect(centered, log_kernel(sigma))
    raw = float(np.mean(response * response))
    return SharpnessScore(raw_power=raw, normalized=100.0 * raw / (raw + norm_constant))


# --- selection strategies ----------------------------------------------------


@dataclass(frozen=True)
class BestSharpness:
    """Keep the k frames with the highest sharpness (ties: lower index)."""

    k: int
    sigma: float = DEFAULT_LOG_SIGMA

    def __post_init__(self):
        if self.k < 1:
            raise ParameterError(f"k must be >= 1, got {self.k}")


@dataclass(frozen=True)
class RandomK:
    """Keep k distinct frames drawn from a seeded uniform shuffle."""

    k: int
    seed: int

    def __post_init__(self):
        if self.k < 1:
            raise ParameterError(f"k must be >= 1, got {self.k}")


@dataclass(frozen=True)
class SequentialFirst:
    """Keep the first k frames in capture order."""

    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ParameterError(f"k must be >= 1, got {self.k}")


SelectionStrategy = Union[BestSharpness, RandomK, SequentialFirst]


def select_frames(sequence: FrameSequence, strategy: SelectionStrategy) -> list[int]:
    """Pick frame indices per the strategy.

    Sequences shorter than k degrade to returning every frame. The result is
    deterministic for identical inputs and seeds.
    """
    frames = sequence.frames
    n = len(frames)
    if n == 0:
        raise EmptySequenceError(f"sequence '{sequence.sequence_id}' has no frames")
    k = min(strategy.k, n)

    if isinstance(strategy, SequentialFirst):
        return list(range(k))
    if isinstance(strategy, RandomK):
        perm = np.random.default_rng(strategy.seed).permutation(n)
        return [int(i) for i in perm[:k]]
    if isinstance(strategy, BestSharpness):
        powers = [sharpness(f, sigma=strategy.sigma).raw_power for f in frames]
        order = sorted(range(n), key=lambda i: (-powers[i], i))
        return order[:k]
    raise ParameterError(f"unknown selection strategy {strategy!r}")
