"""Condition labels and the Fit/Unfit grouping."""

from __future__ import annotations

import enum

from .errors import ParameterError


class ConditionLabel(enum.IntEnum):
    """Screening condition. Integer codes fix the class order used in
    score vectors, confusion matrices, and exported classifier logits."""

    ALCOHOL = 0
    CONTROL = 1
    DRUG = 2
    SLEEPINESS = 3

    @classmethod
    def from_name(cls, name: str) -> "ConditionLabel":
        key = name.strip().lower()
        try:
            return _NAME_TO_LABEL[key]
        except KeyError:
            raise ParameterError(
                f"unknown condition '{name}' (expected one of "
                f"{sorted(set(_NAME_TO_LABEL))})"
            ) from None

    @property
    def canonical_name(self) -> str:
        return self.name.lower()


_NAME_TO_LABEL = {
    "alcohol": ConditionLabel.ALCOHOL,
    "control": ConditionLabel.CONTROL,
    "drug": ConditionLabel.DRUG,
    "drugs": ConditionLabel.DRUG,
    "sleepiness": ConditionLabel.SLEEPINESS,
    "sleep": ConditionLabel.SLEEPINESS,
}

#: Labels in ascending class-code order.
CODE_ORDER = (
    ConditionLabel.ALCOHOL,
    ConditionLabel.CONTROL,
    ConditionLabel.DRUG,
    ConditionLabel.SLEEPINESS,
)

FIT_LABELS = frozenset({ConditionLabel.CONTROL})
UNFIT_LABELS = frozenset(
    {ConditionLabel.ALCOHOL, ConditionLabel.DRUG, ConditionLabel.SLEEPINESS}
)
