"""Multi-frame score fusion, Fit/Unfit grouping, and threshold decisions."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import EmptyInputError, ParameterError
from .labels import ConditionLabel
from .scores import ClassScores


class FusionPolicy(enum.Enum):
    MAX = "max"
    AVERAGE = "avg"

    @classmethod
    def from_name(cls, name: str) -> "FusionPolicy":
        key = name.strip().lower()
        for policy in cls:
            if key in (policy.value, policy.name.lower()):
                return policy
        raise ParameterError(f"unknown fusion policy '{name}' (expected max or avg)")


class Verdict(enum.Enum):
    FIT = "fit"
    UNFIT = "unfit"


def fuse(frame_scores: Sequence[ClassScores], policy: FusionPolicy) -> ClassScores:
    """Combine per-frame score vectors into one.

    AVERAGE takes the elementwise mean, computed in exact rational arithmetic
    and rounded once, so it is exactly invariant under permutation of the
    frames and exactly idempotent on identical frames. MAX takes the
    elementwise maximum and renormalizes to sum 1, which leaves the class
    ranking unchanged.
    """
    if not frame_scores:
        raise EmptyInputError("cannot fuse an empty list of frame scores")
    if len(frame_scores) == 1:
        return frame_scores[0]
    columns = [
        [s.p_control for s in frame_scores],
        [s.p_alcohol for s in frame_scores],
        [s.p_drug for s in frame_scores],
        [s.p_sleep for s in frame_scores],
    ]
    if policy is FusionPolicy.AVERAGE:
        k = len(frame_scores)
        vals = [float(sum(map(Fraction, col), Fraction(0)) / k) for col in columns]
    elif policy is FusionPolicy.MAX:
        maxes = [max(col) for col in columns]
        total = math.fsum(maxes)
        vals = [m / total for m in maxes]
    else:
        raise ParameterError(f"unknown fusion policy {policy!r}")
    return ClassScores(p_control=vals[0], p_alcohol=vals[1], p_drug=vals[2], p_sleep=vals[3])


def unfit_score(scores: ClassScores) -> float:
    """Probability mass on the three Unfit classes."""
    return scores.p_alcohol + scores.p_drug + scores.p_sleep


@dataclass(frozen=True)
class FfdDecision:
    fused: ClassScores
    unfit_score: float
    predicted_class: ConditionLabel
    verdict: Verdict
    threshold: float


def decide(
    frame_scores: Sequence[ClassScores], policy: FusionPolicy, threshold: float
) -> FfdDecision:
    """Fuse, group, and decide: Unfit iff the unfit score is >= threshold."""
    if not 0.0 <= threshold <= 1.0:
        raise ParameterError(f"threshold must be in [0, 1], got {threshold}")
    fused = fuse(frame_scores, policy)
    u = unfit_score(fused)
    return FfdDecision(
        fused=fused,
        unfit_score=u,
        predicted_class=fused.argmax_label(),
        verdict=Verdict.UNFIT if u >= threshold else Verdict.FIT,
        threshold=threshold,
    )
