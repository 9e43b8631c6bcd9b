"""Biometric evaluation: DET curves, EER, FNR at fixed FPR, confusion
matrices, and report rendering.

Conventions, fixed here because they change third-decimal results:

* a score >= threshold counts as a positive (Unfit) decision;
* the threshold sweep visits every distinct score plus one sentinel above
  the maximum, so FPR runs from 1 down to 0 and FNR from 0 up to 1;
* EER and FNR-at-FPR are linearly interpolated between sweep points;
* the ``fnr10`` / ``fnr20`` report fields are FNR at FPR = 10% and FPR = 5%
  respectively (the operating points' historical names are kept even though
  the second is a 5% target).

Machine-readable outputs carry rates in [0, 1]; human-readable outputs show
percentages.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .decision import unfit_score
from .errors import DegenerateDataError, FfdError, ParameterError
from .labels import CODE_ORDER, ConditionLabel, UNFIT_LABELS
from .scores import ClassScores


@dataclass(frozen=True)
class ScoredItem:
    """One evaluation unit: ground truth plus a (fused) score vector."""

    truth: ConditionLabel
    scores: ClassScores


class DetPoint(NamedTuple):
    threshold: float
    fpr: float
    fnr: float


@dataclass(frozen=True)
class DetCurve:
    """Threshold sweep; thresholds strictly increase, FPR falls, FNR rises."""

    points: tuple[DetPoint, ...]

    def __post_init__(self):
        thr = [p.threshold for p in self.points]
        fpr = [p.fpr for p in self.points]
        fnr = [p.fnr for p in self.points]
        if any(b <= a for a, b in zip(thr, thr[1:])):
            raise FfdError("DET thresholds must be strictly increasing")
        if any(b > a for a, b in zip(fpr, fpr[1:])):
            raise FfdError("DET FPR must be non-increasing")
        if any(b < a for a, b in zip(fnr, fnr[1:])):
            raise FfdError("DET FNR must be non-decreasing")

    def thresholds(self) -> np.ndarray:
        return np.array([p.threshold for p in self.points])

    def fprs(self) -> np.ndarray:
        return np.array([p.fpr for p in self.points])

    def fnrs(self) -> np.ndarray:
        return np.array([p.fnr for p in self.points])


def _split_scores(
    items: Sequence[ScoredItem], positive: ConditionLabel | None
) -> tuple[np.ndarray, np.ndarray]:
    if positive is None:
        pos = [unfit_score(it.scores) for it in items if it.truth in UNFIT_LABELS]
        neg = [unfit_score(it.scores) for it in items if it.truth == ConditionLabel.CONTROL]
    else:
        if positive == ConditionLabel.CONTROL:
            raise ParameterError("positive class must be one of the Unfit conditions")
        pos = [it.scores.for_label(positive) for it in items if it.truth == positive]
        neg = [it.scores.for_label(positive) for it in items if it.truth == ConditionLabel.CONTROL]
    if not pos or not neg:
        raise DegenerateDataError(
            f"need at least one positive and one negative item, got {len(pos)} / {len(neg)}"
        )
    return np.array(pos, dtype=np.float64), np.array(neg, dtype=np.float64)


def det_curve(items: Sequence[ScoredItem], positive: ConditionLabel | None = None) -> DetCurve:
    """Sweep thresholds over the item scores.

    ``positive=None`` evaluates grouped Unfit-vs-Control on the unfit score;
    a specific Unfit label evaluates that class's probability against Control
    items only (other conditions are excluded).
    """
    pos, neg = _split_scores(items, positive)
    return det_curve_from_scores(pos, neg)


def det_curve_from_scores(pos: np.ndarray, neg: np.ndarray) -> DetCurve:
    """DET curve from raw positive/negative score arrays."""
    pos = np.sort(np.asarray(pos, dtype=np.float64))
    neg = np.sort(np.asarray(neg, dtype=np.float64))
    if pos.size == 0 or neg.size == 0:
        raise DegenerateDataError("both positive and negative scores are required")
    distinct = np.unique(np.concatenate([pos, neg]))
    thresholds = np.append(distinct, distinct[-1] + 1.0)
    # score >= t is a positive decision
    fpr = (neg.size - np.searchsorted(neg, thresholds, side="left")) / neg.size
    fnr = np.searchsorted(pos, thresholds, side="left") / pos.size
    return DetCurve(
        points=tuple(
            DetPoint(float(t), float(p), float(n))
            for t, p, n in zip(thresholds, fpr, fnr)
        )
    )


@dataclass(frozen=True)
class EerPoint:
    value: float
    threshold: float
    degenerate: bool = False


def eer_point(curve: DetCurve) -> EerPoint:
    """Equal error rate: the FPR/FNR crossing, linearly interpolated.

    With the sentinel sweep point the crossing always exists; if a curve is
    supplied without a bracketing pair, the midpoint of the closest pair is
    returned with ``degenerate=True``.
    """
    pts = curve.points
    if len(pts) == 1:
        p = pts[0]
        return EerPoint(value=(p.fpr + p.fnr) / 2.0, threshold=p.threshold, degenerate=True)
    diffs = [p.fpr - p.fnr for p in pts]
    for i in range(len(pts) - 1):
        d0, d1 = diffs[i], diffs[i + 1]
        if d0 == 0.0:
            return EerPoint(value=pts[i].fpr, threshold=pts[i].threshold)
        if (d0 > 0.0) != (d1 > 0.0) or d1 == 0.0:
            lam = d0 / (d0 - d1)
            value = pts[i].fpr + lam * (pts[i + 1].fpr - pts[i].fpr)
            thr = pts[i].threshold + lam * (pts[i + 1].threshold - pts[i].threshold)
            return EerPoint(value=value, threshold=thr)
    # No sign change: report the pair with the smallest |FPR - FNR|.
    best = min(range(len(pts)), key=lambda i: abs(diffs[i]))
    return EerPoint(
        value=(pts[best].fpr + pts[best].fnr) / 2.0,
        threshold=pts[best].threshold,
        degenerate=True,
    )


def eer(curve: DetCurve) -> float:
    return eer_point(curve).value


class FnrAtFpr(NamedTuple):
    value: float
    clamped: bool


def fnr_at_fpr(curve: DetCurve, fpr_target: float) -> FnrAtFpr:
    """FNR linearly interpolated at the requested FPR.

    On an FPR plateau equal to the target, the point with the highest
    threshold (largest FNR on the plateau) is used. Targets outside the
    curve's FPR range clamp to the nearest endpoint and set the flag.
    """
    if not 0.0 < fpr_target < 1.0:
        raise ParameterError(f"fpr_target must be in (0, 1), got {fpr_target}")
    pts = curve.points
    fprs = [p.fpr for p in pts]
    if fpr_target > fprs[0]:
        return FnrAtFpr(value=pts[0].fnr, clamped=True)
    if fpr_target < fprs[-1]:
        return FnrAtFpr(value=pts[-1].fnr, clamped=True)
    # last index with fpr >= target (fprs are non-increasing)
    i = max(j for j in range(len(pts)) if fprs[j] >= fpr_target)
    if fprs[i] == fpr_target or i == len(pts) - 1:
        return FnrAtFpr(value=pts[i].fnr, clamped=False)
    lam = (fprs[i] - fpr_target) / (fprs[i] - fprs[i + 1])
    return FnrAtFpr(value=pts[i].fnr + lam * (pts[i + 1].fnr - pts[i].fnr), clamped=False)


# --- confusion matrices ------------------------------------------------------


def confusion4(items: Sequence[ScoredItem]) -> np.ndarray:
    """4x4 counts; rows = truth, columns = argmax prediction, class-code order."""
    m = np.zeros((4, 4), dtype=np.int64)
    for it in items:
        m[int(it.truth), int(it.scores.argmax_label())] += 1
    return m


def confusion2(items: Sequence[ScoredItem], threshold: float) -> np.ndarray:
    """2x2 counts; rows/cols = (Fit, Unfit), decision = unfit score >= threshold."""
    m = np.zeros((2, 2), dtype=np.int64)
    for it in items:
        truth_unfit = it.truth in UNFIT_LABELS
        pred_unfit = unfit_score(it.scores) >= threshold
        m[int(truth_unfit), int(pred_unfit)] += 1
    return m


# --- report ------------------------------------------------------------------


@dataclass(frozen=True)
class EvalReport:
    eer: float
    fnr10: float
    fnr20: float
    threshold: float
    confusion4: np.ndarray
    confusion2: np.ndarray
    per_class_accuracy: tuple[float, float, float, float]
    grouped_accuracy: tuple[float, float]
    curve: DetCurve
    fnr10_clamped: bool = False
    fnr20_clamped: bool = False
    eer_degenerate: bool = False


FNR10_TARGET = 0.10
FNR20_TARGET = 0.05


def evaluate(items: Sequence[ScoredItem]) -> EvalReport:
    """Full grouped Unfit-vs-Control evaluation of fused items.

    The 2-class confusion matrix is taken at this item set's EER threshold.
    Per-class accuracies for classes absent from the items are reported as 0.
    """
    curve = det_curve(items)
    ep = eer_point(curve)
    f10 = fnr_at_fpr(curve, FNR10_TARGET)
    f20 = fnr_at_fpr(curve, FNR20_TARGET)
    c4 = confusion4(items)
    c2 = confusion2(items, ep.threshold)
    row_sums = c4.sum(axis=1)
    per_class = tuple(
        float(c4[i, i] / row_sums[i]) if row_sums[i] else 0.0 for i in range(4)
    )
    g_sums = c2.sum(axis=1)
    grouped = tuple(
        float(c2[i, i] / g_sums[i]) if g_sums[i] else 0.0 for i in range(2)
    )
    return EvalReport(
        eer=ep.value,
        fnr10=f10.value,
        fnr20=f20.value,
        threshold=ep.threshold,
        confusion4=c4,
        confusion2=c2,
        per_class_accuracy=per_class,
        grouped_accuracy=grouped,
        curve=curve,
        fnr10_clamped=f10.clamped,
        fnr20_clamped=f20.clamped,
        eer_degenerate=ep.degenerate,
    )


def report_json(report: EvalReport) -> str:
    """Machine-readable report; all error figures are rates in [0, 1]."""
    payload = {
        "eer": report.eer,
        "eer_degenerate": report.eer_degenerate,
        "fnr10": report.fnr10,
        "fnr10_fpr_target": FNR10_TARGET,
        "fnr10_clamped": report.fnr10_clamped,
        "fnr20": report.fnr20,
        "fnr20_fpr_target": FNR20_TARGET,
        "fnr20_clamped": report.fnr20_clamped,
        "threshold": report.threshold,
        "class_order": [label.canonical_name for label in CODE_ORDER],
        "confusion4": report.confusion4.tolist(),
        "confusion2": report.confusion2.tolist(),
        "per_class_accuracy": {
            label.canonical_name: report.per_class_accuracy[int(label)]
            for label in CODE_ORDER
        },
        "grouped_accuracy": {
            "fit": report.grouped_accuracy[0],
            "unfit": report.grouped_accuracy[1],
        },
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _pct(x: float) -> str:
    return f"{100.0 * x:.2f}%"


def report_markdown(report: EvalReport) -> str:
    lines = [
        "# Fitness-for-duty evaluation",
        "",
        "| Metric | Value |",
        "| --- | --- |",
        f"| EER | {_pct(report.eer)} |",
        f"| FNR@FPR=10% | {_pct(report.fnr10)} |",
        f"| FNR@FPR=5% | {_pct(report.fnr20)} |",
        f"| Operating threshold (EER) | {report.threshold:.6f} |",
        f"| Fit accuracy | {_pct(report.grouped_accuracy[0])} |",
        f"| Unfit accuracy | {_pct(report.grouped_accuracy[1])} |",
        "",
        "## Four-class confusion (rows: truth, cols: prediction)",
        "",
        "| | " + " | ".join(label.canonical_name for label in CODE_ORDER) + " |",
        "| --- | --- | --- | --- | --- |",
    ]
    for label in CODE_ORDER:
        row = report.confusion4[int(label)]
        lines.append(
            f"| {label.canonical_name} | " + " | ".join(str(int(v)) for v in row) + " |"
        )
    lines += [
        "",
        "## Per-class accuracy",
        "",
        "| Class | Accuracy |",
        "| --- | --- |",
    ]
    for label in CODE_ORDER:
        lines.append(f"| {label.canonical_name} | {_pct(report.per_class_accuracy[int(label)])} |")
    lines += [
        "",
        "## Fit/Unfit confusion at the EER threshold",
        "",
        "| | fit | unfit |",
        "| --- | --- | --- |",
        f"| fit | {int(report.confusion2[0, 0])} | {int(report.confusion2[0, 1])} |",
        f"| unfit | {int(report.confusion2[1, 0])} | {int(report.confusion2[1, 1])} |",
        "",
    ]
    return "\n".join(lines)


def det_csv(curve: DetCurve) -> str:
    lines = ["threshold,fpr,fnr"]
    for p in curve.points:
        lines.append(f"{p.threshold!r},{p.fpr!r},{p.fnr!r}")
    return "\n".join(lines) + "\n"


_SVG_FLOOR_PCT = 0.1  # log axes cannot show zero; clamp to 0.1%


def det_svg(curve: DetCurve, markers: tuple[float, ...] = (FNR10_TARGET, FNR20_TARGET)) -> str:
    """DET plot with log-scaled percent axes and vertical operating-point
    markers. Output is plain deterministic SVG text."""
    width, height, margin = 560, 560, 60
    lo, hi = math.log10(_SVG_FLOOR_PCT), math.log10(100.0)

    def sx(pct: float) -> float:
        pct = min(max(pct, _SVG_FLOOR_PCT), 100.0)
        return margin + (math.log10(pct) - lo) / (hi - lo) * (width - 2 * margin)

    def sy(pct: float) -> float:
        pct = min(max(pct, _SVG_FLOOR_PCT), 100.0)
        return height - margin - (math.log10(pct) - lo) / (hi - lo) * (height - 2 * margin)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    for decade in (0.1, 1.0, 10.0, 100.0):
        x, y = sx(decade), sy(decade)
        parts.append(
            f'<line x1="{x:.2f}" y1="{margin}" x2="{x:.2f}" y2="{height - margin}" '
            'stroke="#dddddd" stroke-width="1"/>'
        )
        parts.append(
            f'<line x1="{margin}" y1="{y:.2f}" x2="{width - margin}" y2="{y:.2f}" '
            'stroke="#dddddd" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{x:.2f}" y="{height - margin + 18}" font-size="11" '
            f'text-anchor="middle" font-family="sans-serif">{decade:g}</text>'
        )
        parts.append(
            f'<text x="{margin - 8}" y="{y + 4:.2f}" font-size="11" '
            f'text-anchor="end" font-family="sans-serif">{decade:g}</text>'
        )
    for target in markers:
        x = sx(100.0 * target)
        parts.append(
            f'<line x1="{x:.2f}" y1="{margin}" x2="{x:.2f}" y2="{height - margin}" '
            'stroke="black" stroke-width="1" stroke-dasharray="4 3"/>'
        )
    coords = " ".join(
        f"{sx(100.0 * p.fpr):.2f},{sy(100.0 * p.fnr):.2f}" for p in curve.points
    )
    parts.append(
        f'<polyline points="{coords}" fill="none" stroke="#c0392b" stroke-width="1.5"/>'
    )
    parts.append(
        f'<rect x="{margin}" y="{margin}" width="{width - 2 * margin}" '
        f'height="{height - 2 * margin}" fill="none" stroke="black" stroke-width="1"/>'
    )
    parts.append(
        f'<text x="{width / 2:.0f}" y="{height - 14}" font-size="13" text-anchor="middle" '
        'font-family="sans-serif">FPR (%)</text>'
    )
    parts.append(
        f'<text x="16" y="{height / 2:.0f}" font-size="13" text-anchor="middle" '
        f'font-family="sans-serif" transform="rotate(-90 16 {height / 2:.0f})">FNR (%)</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
