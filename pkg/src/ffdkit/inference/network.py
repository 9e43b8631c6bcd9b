"""Width-scaled inverted-residual classifier: architecture description,
weight-shape manifest, and the forward pass."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ParameterError, ShapeError, WeightsError
from ..imaging import ImageTensor
from ..scores import ClassScores
from . import ops
from .bundle import WeightBundle

SPEC_VERSION = 1

#: Reference inverted-residual block table: (expansion t, channels c,
#: repeats n, first-repeat stride s).
BASE_BLOCK_TABLE = (
    (1, 16, 1, 1),
    (6, 24, 2, 2),
    (6, 32, 3, 2),
    (6, 64, 4, 2),
    (6, 96, 3, 1),
    (6, 160, 3, 2),
    (6, 320, 1, 1),
)

BASE_STEM_CHANNELS = 32
BASE_HEAD_CHANNELS = 1280
NUM_CLASSES = 4

POOLING_MODES = ("flatten", "global_average")


def width_scaled_channels(alpha: float, base: int) -> int:
    """Scale a channel count by alpha, rounded to a multiple of 8.

    Rounds alpha*base to the nearest multiple of 8 (never below 8) and bumps
    up one step if rounding lost more than 10% of the scaled value.
    """
    if alpha <= 0 or base < 1:
        raise ParameterError(f"need alpha > 0 and base >= 1, got {alpha}, {base}")
    v = alpha * base
    scaled = max(8, int(v + 4) // 8 * 8)
    if scaled < 0.9 * v:
        scaled += 8
    return scaled


@dataclass(frozen=True)
class BlockDef:
    t: int
    c: int
    n: int
    s: int


@dataclass(frozen=True)
class StemDef:
    out_ch: int = BASE_STEM_CHANNELS
    kernel: int = 3
    stride: int = 2


@dataclass(frozen=True)
class HeadDef:
    conv_ch: int = BASE_HEAD_CHANNELS
    pooling: str = "flatten"
    classes: int = NUM_CLASSES


@dataclass(frozen=True)
class BlockPlan:
    """One inverted-residual instance with resolved channel counts."""

    name: str
    in_ch: int
    hidden_ch: int
    out_ch: int
    stride: int

    @property
    def expand(self) -> bool:
        return self.hidden_ch != self.in_ch

    @property
    def residual(self) -> bool:
        return self.stride == 1 and self.in_ch == self.out_ch


@dataclass(frozen=True)
class NetworkSpec:
    """Architecture description; all channel counts derive from ``alpha``."""

    alpha: float = 1.4
    input_size: int = 448
    stem: StemDef = StemDef()
    blocks: tuple[BlockDef, ...] = tuple(BlockDef(*b) for b in BASE_BLOCK_TABLE)
    head: HeadDef = HeadDef()

    def __post_init__(self):
        if self.head.pooling not in POOLING_MODES:
            raise ParameterError(
                f"pooling must be one of {POOLING_MODES}, got '{self.head.pooling}'"
            )
        if self.input_size < 1:
            raise ParameterError(f"input_size must be >= 1, got {self.input_size}")

    @property
    def stem_channels(self) -> int:
        return width_scaled_channels(self.alpha, self.stem.out_ch)

    @property
    def head_channels(self) -> int:
        # Reference convention: the head conv is widened only for alpha > 1.
        if self.alpha > 1.0:
            return width_scaled_channels(self.alpha, self.head.conv_ch)
        return self.head.conv_ch

    def block_plans(self) -> list[BlockPlan]:
        plans: list[BlockPlan] = []
        in_ch = self.stem_channels
        index = 0
        for block in self.blocks:
            out_ch = width_scaled_channels(self.alpha, block.c)
            for repeat in range(block.n):
                plans.append(
                    BlockPlan(
                        name=f"block{index:02d}",
                        in_ch=in_ch,
                        hidden_ch=in_ch * block.t,
                        out_ch=out_ch,
                        stride=block.s if repeat == 0 else 1,
                    )
                )
                in_ch = out_ch
                index += 1
        return plans

    def feature_map_size(self) -> int:
        """Spatial side length of the final feature map."""
        size = -(-self.input_size // self.stem.stride)
        for plan in self.block_plans():
            size = -(-size // plan.stride)
        return size

    def feature_count(self) -> int:
        if self.head.pooling == "global_average":
            return self.head_channels
        side = self.feature_map_size()
        return side * side * self.head_channels

    def required_tensors(self) -> dict[str, tuple[int, ...]]:
        """Tensor name -> shape manifest for a matching weight bundle."""
        shapes: dict[str, tuple[int, ...]] = {}

        def bn(base: str, ch: int):
            for p in ("gamma", "beta", "mean", "var"):
                shapes[f"{base}/{p}"] = (ch,)

        k = self.stem.kernel
        shapes["stem/kernel"] = (k, k, 3, self.stem_channels)
        bn("stem", self.stem_channels)
        for plan in self.block_plans():
            if plan.expand:
                shapes[f"{plan.name}/expand/kernel"] = (1, 1, plan.in_ch, plan.hidden_ch)
                bn(f"{plan.name}/expand", plan.hidden_ch)
            shapes[f"{plan.name}/dw/kernel"] = (3, 3, plan.hidden_ch)
            bn(f"{plan.name}/dw", plan.hidden_ch)
            shapes[f"{plan.name}/project/kernel"] = (1, 1, plan.hidden_ch, plan.out_ch)
            bn(f"{plan.name}/project", plan.out_ch)
        last = self.block_plans()[-1].out_ch if self.blocks else self.stem_channels
        shapes["head/kernel"] = (1, 1, last, self.head_channels)
        bn("head", self.head_channels)
        shapes["classifier/weight"] = (self.feature_count(), self.head.classes)
        shapes["classifier/bias"] = (self.head.classes,)
        return shapes

    # -- JSON form -------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "version": SPEC_VERSION,
            "alpha": self.alpha,
            "input_size": self.input_size,
            "stem": {"out_ch": self.stem.out_ch, "kernel": self.stem.kernel,
                     "stride": self.stem.stride},
            "blocks": [{"t": b.t, "c": b.c, "n": b.n, "s": b.s} for b in self.blocks],
            "head": {"conv_ch": self.head.conv_ch, "pooling": self.head.pooling,
                     "classes": self.head.classes},
        }

    @classmethod
    def from_json(cls, raw: dict) -> "NetworkSpec":
        if raw.get("version") != SPEC_VERSION:
            raise ParameterError(
                f"unsupported network spec version {raw.get('version')!r}"
            )
        stem = raw.get("stem", {})
        head = raw.get("head", {})
        return cls(
            alpha=float(raw["alpha"]),
            input_size=int(raw["input_size"]),
            stem=StemDef(
                out_ch=int(stem.get("out_ch", BASE_STEM_CHANNELS)),
                kernel=int(stem.get("kernel", 3)),
                stride=int(stem.get("stride", 2)),
            ),
            blocks=tuple(
                BlockDef(t=int(b["t"]), c=int(b["c"]), n=int(b["n"]), s=int(b["s"]))
                for b in raw["blocks"]
            ),
            head=HeadDef(
                conv_ch=int(head.get("conv_ch", BASE_HEAD_CHANNELS)),
                pooling=str(head.get("pooling", "flatten")),
                classes=int(head.get("classes", NUM_CLASSES)),
            ),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "NetworkSpec":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))

    def to_file(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2) + "\n", encoding="utf-8")


def default_spec() -> NetworkSpec:
    """The shipped configuration: alpha 1.4, 448 input, flatten head."""
    return NetworkSpec()


def default_spec_path() -> Path:
    return Path(__file__).resolve().parent.parent / "data" / "ffd_width14_448.json"


class FoldedNetwork:
    """A spec bound to a validated weight bundle with batch norm pre-folded."""

    def __init__(self, spec: NetworkSpec, bundle: WeightBundle):
        self.spec = spec
        self._validate(spec, bundle)
        eps = bundle.epsilon
        t = bundle.tensors

        def fold(base: str):
            return ops.batchnorm_fold(
                t[f"{base}/kernel"], t[f"{base}/gamma"], t[f"{base}/beta"],
                t[f"{base}/mean"], t[f"{base}/var"], epsilon=eps,
            )

        self._stem = fold("stem")
        self._blocks = []
        for plan in spec.block_plans():
            expand = fold(f"{plan.name}/expand") if plan.expand else None
            self._blocks.append(
                (plan, expand, fold(f"{plan.name}/dw"), fold(f"{plan.name}/project"))
            )
        self._head = fold("head")
        self._classifier = (t["classifier/weight"], t["classifier/bias"])

    @staticmethod
    def _validate(spec: NetworkSpec, bundle: WeightBundle) -> None:
        required = spec.required_tensors()
        missing = sorted(set(required) - set(bundle.tensors))
        if missing:
            raise WeightsError(f"bundle is missing tensors: {', '.join(missing)}")
        for name, shape in required.items():
            actual = bundle.tensors[name].shape
            if tuple(actual) != shape:
                raise WeightsError(
                    f"tensor '{name}' has shape {tuple(actual)}, spec requires {shape}"
                )
        for name, tensor in bundle.tensors.items():
            if name.endswith("/var") and np.any(tensor <= 0):
                raise WeightsError(f"tensor '{name}' has non-positive variances")

    def forward(self, image: ImageTensor) -> ClassScores:
        spec = self.spec
        expected = (spec.input_size, spec.input_size, 3)
        if image.values.shape != expected:
            raise ShapeError(
                f"input shape {image.values.shape} does not match spec {expected}"
            )
        kernel, bias = self._stem
        x = ops.relu6(ops.conv2d(image.values, kernel, stride=spec.stem.stride) + bias)
        for plan, expand, dw, project in self._blocks:
            y = x
            if expand is not None:
                ek, eb = expand
                y = ops.relu6(ops.conv2d(y, ek) + eb)
            dk, db = dw
            y = ops.relu6(ops.depthwise_conv2d(y, dk, stride=plan.stride) + db)
            pk, pb = project
            y = ops.conv2d(y, pk) + pb
            x = x + y if plan.residual else y
        hk, hb = self._head
        x = ops.relu6(ops.conv2d(x, hk) + hb)
        if spec.head.pooling == "global_average":
            features = x.astype(np.float64).mean(axis=(0, 1)).astype(np.float32)
        else:
            features = x.reshape(-1)
        weight, cls_bias = self._classifier
        probs = ops.softmax(ops.dense(features, weight, cls_bias))
        return ClassScores.from_code_array(probs)


def forward(image: ImageTensor, spec: NetworkSpec, bundle: WeightBundle) -> ClassScores:
    """One-shot forward pass; folds the bundle on every call.

    Use ``FoldedNetwork`` directly when scoring many frames.
    """
    return FoldedNetwork(spec, bundle).forward(image)
