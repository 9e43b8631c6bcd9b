"""Four-way class score vectors, the unit of scoring and fusion."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ScoreValidationError
from .labels import CODE_ORDER, ConditionLabel

#: Allowed deviation of a score vector's sum from 1.
SUM_TOLERANCE = 1e-6

# Slack on the [0, 1] bounds for values produced by float renormalization.
_BOUND_SLACK = 1e-9


@dataclass(frozen=True)
class ClassScores:
    """Probability vector over (control, alcohol, drug, sleepiness).

    Every component must lie in [0, 1] and the four must sum to 1 within
    ``SUM_TOLERANCE``; violating values raise ``ScoreValidationError`` at
    construction time, so an instance is always a valid probability vector.
    """

    p_control: float
    p_alcohol: float
    p_drug: float
    p_sleep: float

    def __post_init__(self):
        vals = (self.p_control, self.p_alcohol, self.p_drug, self.p_sleep)
        for v in vals:
            if not np.isfinite(v):
                raise ScoreValidationError(f"non-finite score {v!r} in {vals}")
            if v < -_BOUND_SLACK or v > 1.0 + _BOUND_SLACK:
                raise ScoreValidationError(f"score {v!r} outside [0, 1] in {vals}")
        total = self.p_control + self.p_alcohol + self.p_drug + self.p_sleep
        if abs(total - 1.0) > SUM_TOLERANCE:
            raise ScoreValidationError(
                f"scores sum to {total!r}, outside 1 +/- {SUM_TOLERANCE} in {vals}"
            )

    def by_code(self) -> np.ndarray:
        """Scores as a float64 array in class-code order."""
        return np.array(
            [self.p_alcohol, self.p_control, self.p_drug, self.p_sleep],
            dtype=np.float64,
        )

    def for_label(self, label: ConditionLabel) -> float:
        return float(self.by_code()[int(label)])

    def argmax_label(self) -> ConditionLabel:
        """Most probable class; ties resolve to the lowest class code."""
        # np.argmax returns the first maximal index, which is the lowest code.
        return CODE_ORDER[int(np.argmax(self.by_code()))]

    @classmethod
    def from_code_array(cls, values) -> "ClassScores":
        """Build from a length-4 sequence ordered by class code."""
        a, c, d, s = (float(v) for v in values)
        return cls(p_control=c, p_alcohol=a, p_drug=d, p_sleep=s)
