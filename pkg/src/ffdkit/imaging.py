"""Grayscale NIR frame representation, CLAHE enhancement, resizing,
channel replication, and training-time augmentation transforms.

All operations are pure: frames are immutable and every function returns a
new frame. Seeded augmentations are bit-reproducible for a fixed seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ImageShapeError, ParameterError


@dataclass(frozen=True)
class GrayFrame:
    """An 8-bit grayscale frame. ``pixels`` is a read-only (H, W) uint8 array."""

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim != 2 or arr.size == 0:
            raise ImageShapeError(f"expected a non-empty 2-D array, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            raise ImageShapeError(f"expected uint8 pixels, got {arr.dtype}")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True)
class ImageTensor:
    """Normalized (H, W, C) float32 tensor with values in [0, 1], C in {1, 3}."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float32)
        if arr.ndim != 3 or arr.shape[2] not in (1, 3):
            raise ImageShapeError(
                f"expected (H, W, C) with C in {{1, 3}}, got shape {arr.shape}"
            )
        if float(arr.min(initial=0.0)) < 0.0 or float(arr.max(initial=0.0)) > 1.0:
            raise ImageShapeError("tensor values outside [0, 1]")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def channels(self) -> int:
        return self.values.shape[2]


# --- file I/O ----------------------------------------------------------------


def load_frame(path: str | Path) -> GrayFrame:
    """Read an 8-bit grayscale PNG or binary PGM (P5) frame."""
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        return GrayFrame(_read_pgm(path))
    from PIL import Image

    with Image.open(path) as img:
        if img.mode != "L":
            raise ImageShapeError(f"{path}: expected 8-bit grayscale, got mode '{img.mode}'")
        return GrayFrame(np.asarray(img, dtype=np.uint8))


def save_frame(frame: GrayFrame, path: str | Path) -> None:
    """Write a frame as PNG or binary PGM depending on the file extension."""
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        _write_pgm(frame.pixels, path)
        return
    from PIL import Image

    Image.fromarray(frame.pixels, mode="L").save(path)


def _read_pgm(path: Path) -> np.ndarray:
    data = path.read_bytes()
    if not data.startswith(b"P5"):
        raise ImageShapeError(f"{path}: not a binary PGM (P5) file")
    # Header tokens may be separated by whitespace and '#' comments.
    tokens: list[int] = []
    pos = 2
    while len(tokens) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ImageShapeError(f"{path}: truncated PGM header")
        tokens.append(int(data[start:pos]))
    pos += 1  # single whitespace after maxval
    width, height, maxval = tokens
    if maxval > 255:
        raise ImageShapeError(f"{path}: 16-bit PGM not supported (maxval {maxval})")
    raster = data[pos : pos + width * height]
    if len(raster) != width * height:
        raise ImageShapeError(f"{path}: raster truncated")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width)


def _write_pgm(pixels: np.ndarray, path: Path) -> None:
    header = f"P5\n{pixels.shape[1]} {pixels.shape[0]}\n255\n".encode("ascii")
    path.write_bytes(header + pixels.tobytes())


# --- CLAHE -------------------------------------------------------------------


def _tile_lut(tile: np.ndarray, clip_limit: float) -> np.ndarray:
    """Equalization lookup table for a single tile.

    Histogram bins above ``clip_limit`` (in units of the average bin height)
    are clipped; the excess is redistributed uniformly, the integer residue
    spread over evenly stepped bins. The mapping is the classic equalization
    transfer function normalized by the first occupied bin; when that
    normalization degenerates (a single occupied bin) the identity map is
    returned.
    """
    n = tile.size
    hist = np.bincount(tile.ravel(), minlength=256).astype(np.int64)
    clip = min(n, max(1, int(clip_limit * n / 256.0)))
    over = hist > clip
    excess = int((hist[over] - clip).sum())
    hist = np.minimum(hist, clip)
    bonus, residue = divmod(excess, 256)
    hist += bonus
    if residue:
        step = max(1, 256 // residue)
        hist[np.arange(0, 256, step)[:residue]] += 1
    cdf = np.cumsum(hist)
    nonzero = np.nonzero(hist)[0]
    cdf_min = int(cdf[nonzero[0]])
    denom = n - cdf_min
    if denom <= 0:
        return np.arange(256, dtype=np.float64)
    return np.rint((cdf - cdf_min) / denom * 255.0).clip(0.0, 255.0)


def clahe(
    frame: GrayFrame,
    grid_rows: int = 8,
    grid_cols: int = 8,
    clip_limit: float = 2.0,
) -> GrayFrame:
    """Contrast-limited adaptive histogram equalization.

    The image is divided into a ``grid_rows x grid_cols`` grid of tiles; each
    tile gets a clipped-equalization lookup table and every pixel is mapped by
    bilinear interpolation between the four neighbouring tile tables (linear
    along the image edges, direct at the corners). Output dimensions equal the
    input and all intensities stay in [0, 255].
    """
    if clip_limit <= 0:
        raise ParameterError(f"clip_limit must be > 0, got {clip_limit}")
    if grid_rows < 1 or grid_cols < 1:
        raise ParameterError("grid must be at least 1x1")
    h, w = frame.pixels.shape
    if h < grid_rows or w < grid_cols:
        raise ImageShapeError(
            f"frame {w}x{h} smaller than CLAHE grid {grid_cols}x{grid_rows}"
        )

    y_edges = [h * r // grid_rows for r in range(grid_rows + 1)]
    x_edges = [w * c // grid_cols for c in range(grid_cols + 1)]
    luts = np.empty((grid_rows, grid_cols, 256), dtype=np.float64)
    for r in range(grid_rows):
        for c in range(grid_cols):
            tile = frame.pixels[y_edges[r] : y_edges[r + 1], x_edges[c] : x_edges[c + 1]]
            luts[r, c] = _tile_lut(tile, clip_limit)

    cy = np.array([(y_edges[r] + y_edges[r + 1] - 1) / 2.0 for r in range(grid_rows)])
    cx = np.array([(x_edges[c] + x_edges[c + 1] - 1) / 2.0 for c in range(grid_cols)])

    def axis_weights(coords, centers):
        i0 = np.clip(np.searchsorted(centers, coords, side="right") - 1, 0, len(centers) - 1)
        i1 = np.minimum(i0 + 1, len(centers) - 1)
        span = centers[i1] - centers[i0]
        t = np.where(span > 0, (coords - centers[i0]) / np.where(span > 0, span, 1.0), 0.0)
        return i0, i1, np.clip(t, 0.0, 1.0)

    r0, r1, ty = axis_weights(np.arange(h, dtype=np.float64), cy)
    c0, c1, tx = axis_weights(np.arange(w, dtype=np.float64), cx)

    img = frame.pixels
    r0g, r1g = r0[:, None], r1[:, None]
    c0g, c1g = c0[None, :], c1[None, :]
    v00 = luts[r0g, c0g, img]
    v01 = luts[r0g, c1g, img]
    v10 = luts[r1g, c0g, img]
    v11 = luts[r1g, c1g, img]
    # Lerp form keeps interpolation exact when neighbouring tables agree.
    top = v00 + tx[None, :] * (v01 - v00)
    bottom = v10 + tx[None, :] * (v11 - v10)
    out = top + ty[:, None] * (bottom - top)
    return GrayFrame(np.rint(out).clip(0, 255).astype(np.uint8))


# --- resize ------------------------------------------------------------------


def _resize_float(arr: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resample with the half-pixel-center convention."""
    in_h, in_w = arr.shape
    src = arr.astype(np.float64)

    def coords(n_out, n_in):
        c = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
        c = np.clip(c, 0.0, n_in - 1.0)
        lo = np.floor(c).astype(np.intp)
        lo = np.minimum(lo, n_in - 1)
        hi = np.minimum(lo + 1, n_in - 1)
        return lo, hi, c - lo

    y0, y1, fy = coords(out_h, in_h)
    x0, x1, fx = coords(out_w, in_w)
    a = src[np.ix_(y0, x0)]
    b = src[np.ix_(y0, x1)]
    c = src[np.ix_(y1, x0)]
    d = src[np.ix_(y1, x1)]
    top = a + fx[None, :] * (b - a)
    bottom = c + fx[None, :] * (d - c)
    return top + fy[:, None] * (bottom - top)


def resize_bilinear(frame: GrayFrame, out_w: int, out_h: int) -> GrayFrame:
    """Resize with bilinear interpolation (corner-aligned-false convention)."""
    if out_w < 1 or out_h < 1:
        raise ParameterError(f"output size must be >= 1, got {out_w}x{out_h}")
    out = _resize_float(frame.pixels, out_h, out_w)
    return GrayFrame(np.rint(out).clip(0, 255).astype(np.uint8))


def to_tensor(frame: GrayFrame, channels: int = 3) -> ImageTensor:
    """Normalize to [0, 1] and replicate the gray channel."""
    if channels not in (1, 3):
        raise ParameterError(f"channels must be 1 or 3, got {channels}")
    norm = (frame.pixels.astype(np.float32) / np.float32(255.0))[:, :, None]
    return ImageTensor(np.repeat(norm, channels, axis=2))


# --- augmentations -----------------------------------------------------------


def gaussian_kernel1d(sigma: float) -> np.ndarray:
    """Normalized sampled Gaussian with radius ceil(3*sigma)."""
    if sigma <= 0:
        raise ParameterError(f"sigma must be > 0, got {sigma}")
    radius = math.ceil(3.0 * sigma)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def _blur_float(arr: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur with mirrored (edge-repeating) borders."""
    k = gaussian_kernel1d(sigma)
    r = (len(k) - 1) // 2
    padded = np.pad(arr.astype(np.float64), ((r, r), (0, 0)), mode="symmetric")
    cols = np.lib.stride_tricks.sliding_window_view(padded, len(k), axis=0)
    out = cols @ k
    padded = np.pad(out, ((0, 0), (r, r)), mode="symmetric")
    rows = np.lib.stride_tricks.sliding_window_view(padded, len(k), axis=1)
    return rows @ k


def gaussian_blur(frame: GrayFrame, sigma: float) -> GrayFrame:
    return GrayFrame(np.rint(_blur_float(frame.pixels, sigma)).clip(0, 255).astype(np.uint8))


def gaussian_noise(frame: GrayFrame, stddev: float, seed: int) -> GrayFrame:
    """Additive per-pixel Gaussian noise, clamped to [0, 255]."""
    if stddev < 0:
        raise ParameterError(f"stddev must be >= 0, got {stddev}")
    rng = np.random.default_rng(seed)
    noisy = frame.pixels.astype(np.float64) + rng.normal(0.0, stddev, frame.pixels.shape)
    return GrayFrame(np.rint(noisy).clip(0, 255).astype(np.uint8))


def coarse_occlusion(frame: GrayFrame, n_rects: int, max_frac: float, seed: int) -> GrayFrame:
    """Blank out ``n_rects`` seeded axis-aligned rectangles (filled with 0).

    Each rectangle side is at most ``max_frac`` of the matching dimension.
    """
    if not 0 < max_frac < 1:
        raise ParameterError(f"max_frac must be in (0, 1), got {max_frac}")
    if n_rects < 0:
        raise ParameterError(f"n_rects must be >= 0, got {n_rects}")
    h, w = frame.pixels.shape
    rng = np.random.default_rng(seed)
    out = frame.pixels.copy()
    max_h = max(1, int(max_frac * h))
    max_w = max(1, int(max_frac * w))
    for _ in range(n_rects):
        rh = int(rng.integers(1, max_h + 1))
        rw = int(rng.integers(1, max_w + 1))
        y = int(rng.integers(0, h - rh + 1))
        x = int(rng.integers(0, w - rw + 1))
        out[y : y + rh, x : x + rw] = 0
    return GrayFrame(out)


def zoom(frame: GrayFrame, factor: float) -> GrayFrame:
    """Zoom in (factor > 1: center crop, resize back) or out (factor < 1:
    pad with edge replication, resize back). factor == 1 is the identity."""
    if factor <= 0:
        raise ParameterError(f"factor must be > 0, got {factor}")
    h, w = frame.pixels.shape
    if factor == 1.0:
        return GrayFrame(frame.pixels)
    if factor > 1.0:
        ch = max(1, round(h / factor))
        cw = max(1, round(w / factor))
        y0 = (h - ch) // 2
        x0 = (w - cw) // 2
        region = frame.pixels[y0 : y0 + ch, x0 : x0 + cw]
    else:
        ch = round(h / factor)
        cw = round(w / factor)
        pad_h = ch - h
        pad_w = cw - w
        region = np.pad(
            frame.pixels,
            ((pad_h // 2, pad_h - pad_h // 2), (pad_w // 2, pad_w - pad_w // 2)),
            mode="edge",
        )
    out = _resize_float(region, h, w)
    return GrayFrame(np.rint(out).clip(0, 255).astype(np.uint8))


#: Named augmentation intensity presets: (blur sigma, noise std, occlusion
#: rectangle count, occlusion max fraction, zoom factor).
AUGMENT_PRESETS: dict[str, tuple[float, float, int, float, float]] = {
    "light": (0.6, 3.0, 1, 0.10, 1.05),
    "medium": (1.2, 8.0, 2, 0.20, 1.15),
    "heavy": (2.0, 15.0, 3, 0.30, 1.30),
}


def apply_preset(frame: GrayFrame, level: str, seed: int) -> GrayFrame:
    """Chain blur, noise, occlusion, and zoom at a named intensity level."""
    try:
        sigma, noise_std, n_rects, max_frac, factor = AUGMENT_PRESETS[level]
    except KeyError:
        raise ParameterError(
            f"unknown augmentation level '{level}' (expected one of "
            f"{sorted(AUGMENT_PRESETS)})"
        ) from None
    out = gaussian_blur(frame, sigma)
    out = gaussian_noise(out, noise_std, seed)
    out = coarse_occlusion(out, n_rects, max_frac, seed + 1)
    return zoom(out, factor)
