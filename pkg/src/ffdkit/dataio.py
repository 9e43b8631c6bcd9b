"""Dataset manifests, subject-disjoint split validation, class weights,
and the score/fused CSV file formats."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import (
    DegenerateClassError,
    DuplicateSequenceError,
    ManifestError,
    ScoreFileError,
    ScoreValidationError,
    SubjectOverlapError,
)
from .labels import CODE_ORDER, ConditionLabel
from .scores import ClassScores

MANIFEST_VERSION = 1
VALID_SPLITS = ("train", "validation", "test")

SCORE_CSV_HEADER = ("sequence_id", "frame_index", "p_control", "p_alcohol", "p_drug", "p_sleep")
FUSED_CSV_HEADER = (
    "sequence_id",
    "condition",
    "p_control",
    "p_alcohol",
    "p_drug",
    "p_sleep",
    "unfit_score",
)


@dataclass(frozen=True)
class SequenceEntry:
    """One capture session: an ordered frame sequence with metadata."""

    sequence_id: str
    subject_id: str
    condition: ConditionLabel
    device: str
    split: str
    frame_paths: tuple[str, ...]
    frame_timestamps_ms: tuple[int, ...] | None = None


@dataclass(frozen=True)
class DatasetManifest:
    """Validated collection of sequence entries.

    ``base_dir`` records where the manifest file lived so relative frame
    paths can be resolved later; it does not participate in equality.
    """

    entries: tuple[SequenceEntry, ...]
    base_dir: Path | None = field(default=None, compare=False)

    def __len__(self) -> int:
        return len(self.entries)

    def by_split(self, split: str) -> tuple[SequenceEntry, ...]:
        return tuple(e for e in self.entries if e.split == split)

    def entry(self, sequence_id: str) -> SequenceEntry:
        for e in self.entries:
            if e.sequence_id == sequence_id:
                return e
        raise KeyError(sequence_id)

    def resolve_frame_path(self, entry: SequenceEntry, frame_index: int) -> Path:
        p = Path(entry.frame_paths[frame_index])
        if not p.is_absolute() and self.base_dir is not None:
            p = self.base_dir / p
        return p


@dataclass(frozen=True)
class SplitViolation:
    subject_id: str
    splits: frozenset[str]


@dataclass(frozen=True)
class FrameSequence:
    """A sequence entry with its frames loaded into memory."""

    sequence_id: str
    subject_id: str
    condition: ConditionLabel
    frames: tuple  # tuple[GrayFrame, ...]
    timestamps_ms: tuple[int, ...] | None = None


def _parse_entry(raw: object, index: int) -> SequenceEntry:
    if not isinstance(raw, dict):
        raise ManifestError(f"entry {index}: expected an object, got {type(raw).__name__}")
    ident = raw.get("sequence_id", f"<entry {index}>")

    def need(key: str):
        if key not in raw:
            raise ManifestError(f"entry {index} ({ident}): missing field '{key}'")
        return raw[key]

    sequence_id = need("sequence_id")
    subject_id = need("subject_id")
    split = need("split")
    if split not in VALID_SPLITS:
        raise ManifestError(
            f"entry {index} ({ident}): split '{split}' not in {VALID_SPLITS}"
        )
    try:
        condition = ConditionLabel.from_name(str(need("condition")))
    except Exception as exc:
        raise ManifestError(f"entry {index} ({ident}): {exc}") from None

    frame_paths = need("frame_paths")
    if not isinstance(frame_paths, list) or not frame_paths:
        raise ManifestError(f"entry {index} ({ident}): frame_paths must be a non-empty list")

    timestamps = raw.get("frame_timestamps_ms")
    if timestamps is not None:
        if len(timestamps) != len(frame_paths):
            raise ManifestError(
                f"entry {index} ({ident}): {len(timestamps)} timestamps for "
                f"{len(frame_paths)} frames"
            )
        if any(b <= a for a, b in zip(timestamps, timestamps[1:])):
            raise ManifestError(
                f"entry {index} ({ident}): frame_timestamps_ms not strictly increasing"
            )
        timestamps = tuple(int(t) for t in timestamps)

    return SequenceEntry(
        sequence_id=str(sequence_id),
        subject_id=str(subject_id),
        condition=condition,
        device=str(raw.get("device", "")),
        split=str(split),
        frame_paths=tuple(str(p) for p in frame_paths),
        frame_timestamps_ms=timestamps,
    )


def parse_manifest(raw: dict, base_dir: Path | None = None) -> DatasetManifest:
    """Parse manifest JSON into entries, checking structural invariants.

    Split disjointness is NOT checked here; use ``load_manifest`` for a
    fully validated manifest or call ``validate_splits`` explicitly.
    """
    if not isinstance(raw, dict):
        raise ManifestError("manifest root must be a JSON object")
    if raw.get("version") != MANIFEST_VERSION:
        raise ManifestError(
            f"unsupported manifest version {raw.get('version')!r} "
            f"(expected {MANIFEST_VERSION})"
        )
    raw_entries = raw.get("entries")
    if not isinstance(raw_entries, list):
        raise ManifestError("manifest must contain an 'entries' array")
    entries = [_parse_entry(e, i) for i, e in enumerate(raw_entries)]

    seen: dict[str, int] = {}
    for i, e in enumerate(entries):
        if e.sequence_id in seen:
            raise DuplicateSequenceError(
                f"sequence_id '{e.sequence_id}' used by entries "
                f"{seen[e.sequence_id]} and {i}"
            )
        seen[e.sequence_id] = i

    return DatasetManifest(entries=tuple(entries), base_dir=base_dir)


def load_manifest(path: str | Path) -> DatasetManifest:
    """Load and fully validate a manifest file.

    Raises ``ManifestError`` subtypes for malformed entries, duplicate
    sequence ids, or subject-overlap across splits. Frame files are not
    checked for existence here; missing frames surface at read time.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: not valid JSON ({exc})") from None
    manifest = parse_manifest(raw, base_dir=path.parent)
    violations = validate_splits(manifest)
    if violations:
        raise SubjectOverlapError(violations)
    return manifest


def validate_splits(manifest: DatasetManifest) -> list[SplitViolation]:
    """Return one violation per subject that appears in multiple splits.

    An empty list means the manifest is subject-disjoint. Violations are
    returned as data rather than raised so callers can report them all.
    """
    splits_by_subject: dict[str, set[str]] = {}
    for e in manifest.entries:
        splits_by_subject.setdefault(e.subject_id, set()).add(e.split)
    return [
        SplitViolation(subject_id=s, splits=frozenset(sp))
        for s, sp in sorted(splits_by_subject.items())
        if len(sp) > 1
    ]


def manifest_to_json(manifest: DatasetManifest) -> dict:
    entries = []
    for e in manifest.entries:
        d = {
            "sequence_id": e.sequence_id,
            "subject_id": e.subject_id,
            "condition": e.condition.canonical_name,
            "device": e.device,
            "split": e.split,
            "frame_paths": list(e.frame_paths),
        }
        if e.frame_timestamps_ms is not None:
            d["frame_timestamps_ms"] = list(e.frame_timestamps_ms)
        entries.append(d)
    return {"version": MANIFEST_VERSION, "entries": entries}


def save_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(manifest_to_json(manifest), indent=2) + "\n", encoding="utf-8"
    )


def load_sequence(manifest: DatasetManifest, entry: SequenceEntry) -> FrameSequence:
    """Read all frames of one entry from disk."""
    from .imaging import load_frame  # deferred: imaging pulls in PIL

    frames = tuple(
        load_frame(manifest.resolve_frame_path(entry, i))
        for i in range(len(entry.frame_paths))
    )
    return FrameSequence(
        sequence_id=entry.sequence_id,
        subject_id=entry.subject_id,
        condition=entry.condition,
        frames=frames,
        timestamps_ms=entry.frame_timestamps_ms,
    )


# --- class weights -----------------------------------------------------------

N_CLASSES = 4


@dataclass(frozen=True)
class ClassCounts:
    """Per-condition sample counts."""

    alcohol: int
    control: int
    drug: int
    sleepiness: int

    @property
    def total(self) -> int:
        return self.alcohol + self.control + self.drug + self.sleepiness

    def for_label(self, label: ConditionLabel) -> int:
        return (self.alcohol, self.control, self.drug, self.sleepiness)[int(label)]

    @classmethod
    def from_manifest(cls, manifest: DatasetManifest, split: str, unit: str = "frames") -> "ClassCounts":
        """Count frames (or sequences with unit='sequences') per condition."""
        counts = {label: 0 for label in CODE_ORDER}
        for e in manifest.entries:
            if e.split != split:
                continue
            counts[e.condition] += len(e.frame_paths) if unit == "frames" else 1
        return cls(
            alcohol=counts[ConditionLabel.ALCOHOL],
            control=counts[ConditionLabel.CONTROL],
            drug=counts[ConditionLabel.DRUG],
            sleepiness=counts[ConditionLabel.SLEEPINESS],
        )


@dataclass(frozen=True)
class ClassWeights:
    """Per-condition loss weights balancing unequal class counts."""

    alcohol: float
    control: float
    drug: float
    sleepiness: float

    def for_label(self, label: ConditionLabel) -> float:
        return (self.alcohol, self.control, self.drug, self.sleepiness)[int(label)]

    def as_dict(self) -> dict[str, float]:
        return {label.canonical_name: self.for_label(label) for label in CODE_ORDER}


def compute_class_weights(counts: ClassCounts) -> ClassWeights:
    """weight_i = total / (4 * count_i), favouring under-represented classes.

    Raises ``DegenerateClassError`` if any class has a zero count.
    """
    total = counts.total
    weights = []
    for label in CODE_ORDER:
        n = counts.for_label(label)
        if n <= 0:
            raise DegenerateClassError(
                f"class '{label.canonical_name}' has count {n}; "
                "all classes need at least one sample"
            )
        weights.append(total / (N_CLASSES * n))
    return ClassWeights(*weights)


# --- score CSV ---------------------------------------------------------------


@dataclass(frozen=True)
class ScoreRow:
    sequence_id: str
    frame_index: int
    scores: ClassScores


@dataclass(frozen=True)
class FusedRow:
    sequence_id: str
    condition: ConditionLabel
    scores: ClassScores
    unfit_score: float


def _fmt(x: float) -> str:
    return repr(float(x))


def read_score_csv(path: str | Path) -> list[ScoreRow]:
    """Read per-frame scores, enforcing header and row normalization."""
    rows: list[ScoreRow] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != SCORE_CSV_HEADER:
            raise ScoreFileError(
                f"{path}: expected header {','.join(SCORE_CSV_HEADER)}, got {header}"
            )
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(SCORE_CSV_HEADER):
                raise ScoreFileError(f"{path}:{lineno}: expected {len(SCORE_CSV_HEADER)} fields")
            try:
                scores = ClassScores(
                    p_control=float(rec[2]),
                    p_alcohol=float(rec[3]),
                    p_drug=float(rec[4]),
                    p_sleep=float(rec[5]),
                )
                rows.append(ScoreRow(rec[0], int(rec[1]), scores))
            except ScoreValidationError as exc:
                raise ScoreFileError(f"{path}:{lineno}: {exc}") from None
            except ValueError as exc:
                raise ScoreFileError(f"{path}:{lineno}: {exc}") from None
    return rows


def write_score_csv(path: str | Path, rows: Iterable[ScoreRow]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SCORE_CSV_HEADER)
        for r in rows:
            s = r.scores
            w.writerow(
                [r.sequence_id, r.frame_index, _fmt(s.p_control), _fmt(s.p_alcohol),
                 _fmt(s.p_drug), _fmt(s.p_sleep)]
            )


def read_fused_csv(path: str | Path) -> list[FusedRow]:
    rows: list[FusedRow] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != FUSED_CSV_HEADER:
            raise ScoreFileError(
                f"{path}: expected header {','.join(FUSED_CSV_HEADER)}, got {header}"
            )
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            try:
                scores = ClassScores(
                    p_control=float(rec[2]),
                    p_alcohol=float(rec[3]),
                    p_drug=float(rec[4]),
                    p_sleep=float(rec[5]),
                )
                rows.append(
                    FusedRow(rec[0], ConditionLabel.from_name(rec[1]), scores, float(rec[6]))
                )
            except (ScoreValidationError, ValueError) as exc:
                raise ScoreFileError(f"{path}:{lineno}: {exc}") from None
    return rows


def write_fused_csv(path: str | Path, rows: Iterable[FusedRow]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FUSED_CSV_HEADER)
        for r in rows:
            s = r.scores
            w.writerow(
                [r.sequence_id, r.condition.canonical_name, _fmt(s.p_control),
                 _fmt(s.p_alcohol), _fmt(s.p_drug), _fmt(s.p_sleep), _fmt(r.unfit_score)]
            )
