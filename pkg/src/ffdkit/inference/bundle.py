"""Portable binary weight bundle.

Layout (little-endian, no padding between records):
  magic "FFDW" | version u32 | epsilon f32 | tensor count u32
  per tensor: name length u16, UTF-8 name, ndim u8, dims u32 each,
  raw float32 values in C order.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import WeightsError

MAGIC = b"FFDW"
BUNDLE_VERSION = 1


@dataclass
class WeightBundle:
    """Named float32 tensors plus the batch-norm epsilon they were trained with."""

    epsilon: float = 1e-3
    tensors: dict[str, np.ndarray] = field(default_factory=dict)


def write_bundle(path: str | Path, bundle: WeightBundle) -> None:
    """Serialize; tensors are written in insertion order, bit-exactly."""
    parts = [MAGIC, struct.pack("<I", BUNDLE_VERSION), struct.pack("<f", bundle.epsilon),
             struct.pack("<I", len(bundle.tensors))]
    for name, tensor in bundle.tensors.items():
        name_b = name.encode("utf-8")
        if len(name_b) > 0xFFFF:
            raise WeightsError(f"tensor name too long: {name!r}")
        arr = np.ascontiguousarray(tensor, dtype="<f4")
        if arr.ndim > 255:
            raise WeightsError(f"tensor '{name}' has too many dimensions")
        parts.append(struct.pack("<H", len(name_b)))
        parts.append(name_b)
        parts.append(struct.pack("<B", arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(arr.tobytes(order="C"))
    Path(path).write_bytes(b"".join(parts))


def read_bundle(path: str | Path) -> WeightBundle:
    data = Path(path).read_bytes()
    view = memoryview(data)
    if data[:4] != MAGIC:
        raise WeightsError(f"{path}: bad magic {data[:4]!r} (expected {MAGIC!r})")
    pos = 4

    def take(n: int) -> memoryview:
        nonlocal pos
        if pos + n > len(data):
            raise WeightsError(f"{path}: truncated at byte {pos}")
        chunk = view[pos : pos + n]
        pos += n
        return chunk

    (version,) = struct.unpack("<I", take(4))
    if version != BUNDLE_VERSION:
        raise WeightsError(f"{path}: unsupported bundle version {version}")
    (epsilon,) = struct.unpack("<f", take(4))
    (count,) = struct.unpack("<I", take(4))
    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack("<H", take(2))
        name = bytes(take(name_len)).decode("utf-8")
        (ndim,) = struct.unpack("<B", take(1))
        shape = struct.unpack(f"<{ndim}I", take(4 * ndim)) if ndim else ()
        n_values = int(np.prod(shape, dtype=np.int64)) if ndim else 1
        raw = take(4 * n_values)
        if name in tensors:
            raise WeightsError(f"{path}: duplicate tensor '{name}'")
        tensors[name] = np.frombuffer(raw, dtype="<f4").reshape(shape).copy()
    if pos != len(data):
        raise WeightsError(f"{path}: {len(data) - pos} trailing bytes after last tensor")
    return WeightBundle(epsilon=float(epsilon), tensors=tensors)


def random_bundle(spec, seed: int = 0) -> WeightBundle:
    """Plausible random weights matching a spec; for tests and demos only.

    Kernels use fan-in scaling, batch-norm parameters stay near identity, and
    variances are strictly positive.
    """
    rng = np.random.default_rng(seed)
    tensors: dict[str, np.ndarray] = {}
    for name, shape in spec.required_tensors().items():
        if name.endswith("/gamma"):
            t = rng.uniform(0.9, 1.1, shape)
        elif name.endswith("/beta") or name.endswith("/mean"):
            t = rng.normal(0.0, 0.05, shape)
        elif name.endswith("/var"):
            t = rng.uniform(0.5, 1.5, shape)
        elif name.endswith("/bias"):
            t = np.zeros(shape)
        else:
            fan_in = int(np.prod(shape[:-1])) if len(shape) > 1 else int(shape[0])
            t = rng.normal(0.0, np.sqrt(2.0 / max(fan_in, 1)), shape)
        tensors[name] = t.astype(np.float32)
    return WeightBundle(epsilon=1e-3, tensors=tensors)
