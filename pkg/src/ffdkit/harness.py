"""Synthetic data generation for tests and demos.

Two generators: parameterized periocular-like frames (concentric pupil/iris
discs with optional blur and noise), and a class-conditional score sampler
whose grouped EER has a closed form, which makes it usable as an evaluation
oracle. Everything is seed-deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError, ParameterError
from .evaluation import ScoredItem
from .imaging import GrayFrame, gaussian_blur, gaussian_noise
from .labels import CODE_ORDER, ConditionLabel, UNFIT_LABELS
from .scores import ClassScores

#: Physiologically plausible pupil-to-iris radius ratio range.
PUPIL_RATIO_RANGE = (0.265, 0.515)


@dataclass(frozen=True)
class SyntheticEyeParams:
    width: int = 96
    height: int = 96
    iris_radius: float = 36.0
    pupil_ratio: float = 0.4
    sclera_intensity: int = 170
    iris_intensity: int = 90
    pupil_intensity: int = 30
    blur_sigma: float = 0.0
    noise_std: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.pupil_ratio < 1.0:
            raise ParameterError(f"pupil_ratio must be in (0, 1), got {self.pupil_ratio}")
        cx = (self.width - 1) / 2.0
        cy = (self.height - 1) / 2.0
        if self.iris_radius <= 0 or self.iris_radius > min(cx, cy):
            raise GeometryError(
                f"iris radius {self.iris_radius} does not fit a "
                f"{self.width}x{self.height} frame"
            )


def synth_frame(params: SyntheticEyeParams) -> GrayFrame:
    """Concentric-disc eye: dark pupil inside iris annulus inside sclera."""
    cy = (params.height - 1) / 2.0
    cx = (params.width - 1) / 2.0
    yy, xx = np.mgrid[0 : params.height, 0 : params.width]
    dist = np.sqrt((yy - cy) ** 2 + (xx - cx) ** 2)
    img = np.full((params.height, params.width), params.sclera_intensity, dtype=np.uint8)
    img[dist <= params.iris_radius] = params.iris_intensity
    img[dist <= params.pupil_ratio * params.iris_radius] = params.pupil_intensity
    frame = GrayFrame(img)
    if params.blur_sigma > 0:
        frame = gaussian_blur(frame, params.blur_sigma)
    if params.noise_std > 0:
        frame = gaussian_noise(frame, params.noise_std, params.seed)
    return frame


def textured_frame(rng: np.random.Generator, size: int = 64) -> GrayFrame:
    """A noisy synthetic eye with randomized geometry; handy for sharpness tests."""
    ratio = float(rng.uniform(*PUPIL_RATIO_RANGE))
    params = SyntheticEyeParams(
        width=size,
        height=size,
        iris_radius=float(rng.uniform(size * 0.22, size * 0.42)),
        pupil_ratio=ratio,
        blur_sigma=float(rng.uniform(0.0, 0.8)),
        noise_std=float(rng.uniform(8.0, 20.0)),
        seed=int(rng.integers(0, 2**31)),
    )
    return synth_frame(params)


# --- score sampler -----------------------------------------------------------


def _default_means() -> dict[ConditionLabel, float]:
    return {
        ConditionLabel.CONTROL: 0.4,
        ConditionLabel.ALCOHOL: 0.6,
        ConditionLabel.DRUG: 0.6,
        ConditionLabel.SLEEPINESS: 0.6,
    }


def _default_stds() -> dict[ConditionLabel, float]:
    return {label: 0.1 for label in CODE_ORDER}


def _default_proportions() -> dict[ConditionLabel, float]:
    return {
        ConditionLabel.CONTROL: 0.5,
        ConditionLabel.ALCOHOL: 1.0 / 6.0,
        ConditionLabel.DRUG: 1.0 / 6.0,
        ConditionLabel.SLEEPINESS: 1.0 / 6.0,
    }


@dataclass(frozen=True)
class ScoreSamplerParams:
    """Latent Gaussian separability model.

    Each item draws a latent unfit score from its class's Gaussian; with the
    defaults the control and unfit means are separated by two standard
    deviations, so the grouped EER has the closed form Phi(-1) ~ 0.1587.
    """

    means: dict[ConditionLabel, float] = field(default_factory=_default_means)
    stds: dict[ConditionLabel, float] = field(default_factory=_default_stds)
    proportions: dict[ConditionLabel, float] = field(default_factory=_default_proportions)
    count: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.count < 1:
            raise ParameterError(f"count must be >= 1, got {self.count}")
        for label in CODE_ORDER:
            if self.stds[label] <= 0:
                raise ParameterError(f"stddev for {label.canonical_name} must be > 0")
        total = sum(self.proportions[label] for label in CODE_ORDER)
        if abs(total - 1.0) > 1e-9:
            raise ParameterError(f"class proportions sum to {total}, expected 1")


def latent_to_scores(label: ConditionLabel, latent: float) -> ClassScores:
    """Map a clamped latent unfit score to a valid score vector.

    Control mass is 1 - latent. For Unfit items the residual mass sits on the
    item's true class so the 4-class argmax is meaningful; for Control items
    it is spread evenly over the three Unfit classes.
    """
    u = min(max(latent, 0.0), 1.0)
    if label in UNFIT_LABELS:
        vals = {lab: 0.0 for lab in CODE_ORDER}
        vals[label] = u
    else:
        share = u / 3.0
        vals = {lab: share for lab in UNFIT_LABELS}
    return ClassScores(
        p_control=1.0 - u,
        p_alcohol=vals.get(ConditionLabel.ALCOHOL, 0.0),
        p_drug=vals.get(ConditionLabel.DRUG, 0.0),
        p_sleep=vals.get(ConditionLabel.SLEEPINESS, 0.0),
    )


def synth_scores(params: ScoreSamplerParams) -> list[ScoredItem]:
    """Draw labelled score vectors from the latent Gaussian model."""
    rng = np.random.default_rng(params.seed)
    labels = rng.choice(
        np.array([int(label) for label in CODE_ORDER]),
        size=params.count,
        p=[params.proportions[label] for label in CODE_ORDER],
    )
    items: list[ScoredItem] = []
    for code in labels:
        label = ConditionLabel(int(code))
        latent = rng.normal(params.means[label], params.stds[label])
        items.append(ScoredItem(truth=label, scores=latent_to_scores(label, latent)))
    return items
