"""Command-line entry point for the screening pipeline.

Stages communicate through documented files only (manifest JSON, score CSV,
fused CSV, report JSON/MD, DET CSV/SVG), so each stage can be run, replaced,
or tested in isolation. All outputs are deterministic for fixed inputs,
seeds, and --threads 1; rows are emitted in sorted order regardless of the
worker count.

Exit codes: 0 success, 1 validation/data failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import dataio, decision, evaluation, harness, imaging, quality
from .errors import FfdError, ParameterError
from .inference import (
    CnnScorer,
    NetworkSpec,
    PlaybackScorer,
    default_spec_path,
    read_bundle,
)
from .labels import CODE_ORDER, ConditionLabel
from .scores import ClassScores

#: Pupil-ratio band per condition for synthetic frames; visually distinct so
#: a small classifier can separate the classes.
SYNTH_P_RANGES = {
    ConditionLabel.CONTROL: (0.265, 0.32),
    ConditionLabel.ALCOHOL: (0.32, 0.38),
    ConditionLabel.DRUG: (0.38, 0.45),
    ConditionLabel.SLEEPINESS: (0.45, 0.515),
}

_FRAME_INTERVAL_MS = 111  # ~9 fps capture cadence


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ffdkit",
        description="Fitness-for-duty screening pipeline for NIR periocular frames",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a manifest, including split disjointness")
    p.add_argument("manifest", type=Path)

    p = sub.add_parser("preprocess", help="CLAHE-enhance and resize frames")
    p.add_argument("manifest", type=Path)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--size", type=int, default=448)
    p.add_argument("--no-clahe", action="store_true")
    p.add_argument("--clip-limit", type=float, default=2.0)
    p.add_argument("--grid-rows", type=int, default=8)
    p.add_argument("--grid-cols", type=int, default=8)
    p.add_argument(
        "--cell-pixels",
        type=int,
        default=None,
        help="derive the CLAHE grid from a fixed tile size in pixels instead",
    )
    p.add_argument("--augment", choices=sorted(imaging.AUGMENT_PRESETS), default=None)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("select", help="pick frames per sequence by a selection strategy")
    p.add_argument("manifest", type=Path)
    p.add_argument("--strategy", choices=("best", "random", "seq"), required=True)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--log-sigma", type=float, default=quality.DEFAULT_LOG_SIGMA)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("score", help="score frames with the CNN engine or a playback file")
    p.add_argument("manifest", type=Path)
    p.add_argument("--source", choices=("cnn", "playback"), required=True)
    p.add_argument("--spec", type=Path, default=None, help="network spec JSON (default: shipped)")
    p.add_argument("--weights", type=Path, default=None)
    p.add_argument("--playback", type=Path, default=None)
    p.add_argument("--selection", type=Path, default=None)
    p.add_argument("--clahe", action="store_true", help="apply CLAHE before scoring")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("fuse", help="fuse per-frame scores into per-sequence scores")
    p.add_argument("--scores", type=Path, required=True)
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--policy", choices=("max", "avg"), required=True)
    p.add_argument("--k", type=int, default=None, help="use only the first k frames per sequence")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument(
        "--at-eer",
        type=Path,
        default=None,
        metavar="VAL_FUSED_CSV",
        help="derive the decision threshold from this fused CSV's EER point",
    )
    p.add_argument("--decisions", type=Path, default=None, help="also write verdicts here")

    p = sub.add_parser("eval", help="evaluate fused scores: DET, EER, FNR, confusions")
    p.add_argument("--fused", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument(
        "--positive",
        choices=("unfit", "alcohol", "drug", "sleepiness"),
        default="unfit",
        help="grouped Unfit-vs-Control (default) or one condition vs Control",
    )

    p = sub.add_parser("report", help="fuse + eval in one step, bundling all artifacts")
    p.add_argument("--scores", type=Path, required=True)
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--policy", choices=("max", "avg"), required=True)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("synth", help="generate synthetic frames or scores")
    p.add_argument("--mode", choices=("frames", "scores"), required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--frames", type=int, default=3, help="frames per sequence")
    p.add_argument("--subjects", type=int, default=8, help="frames mode: subject count")
    p.add_argument("--sequences-per-subject", type=int, default=1)
    p.add_argument("--size", type=int, default=96, help="frames mode: image side length")
    p.add_argument("--format", choices=("pgm", "png"), default="pgm")
    p.add_argument("--sequences", type=int, default=200, help="scores mode: sequence count")
    p.add_argument("--control-mean", type=float, default=0.4)
    p.add_argument("--unfit-mean", type=float, default=0.6)
    p.add_argument("--std", type=float, default=0.1)
    p.add_argument("--control-share", type=float, default=0.5)

    p = sub.add_parser("weights-info", help="dump weight-bundle contents")
    p.add_argument("bundle", type=Path)
    p.add_argument("--json", action="store_true")

    return parser


# --- subcommand implementations ----------------------------------------------


def _cmd_validate(args) -> int:
    try:
        manifest = dataio.load_manifest(args.manifest)
    except FfdError as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return 1
    subjects = {e.subject_id for e in manifest.entries}
    print(
        f"ok: {len(manifest.entries)} sequences, {len(subjects)} subjects, "
        "splits are subject-disjoint"
    )
    return 0


def _clahe_grid(args, frame: imaging.GrayFrame) -> tuple[int, int]:
    if args.cell_pixels is not None:
        if args.cell_pixels < 1:
            raise ParameterError("--cell-pixels must be >= 1")
        return (
            max(1, -(-frame.height // args.cell_pixels)),
            max(1, -(-frame.width // args.cell_pixels)),
        )
    return args.grid_rows, args.grid_cols


def _cmd_preprocess(args) -> int:
    manifest = dataio.load_manifest(args.manifest)
    frames_dir = args.out / "frames"
    frames_dir.mkdir(parents=True, exist_ok=True)
    new_entries = []
    for entry in sorted(manifest.entries, key=lambda e: e.sequence_id):
        new_paths = []
        for i in range(len(entry.frame_paths)):
            frame = imaging.load_frame(manifest.resolve_frame_path(entry, i))
            if not args.no_clahe:
                rows, cols = _clahe_grid(args, frame)
                frame = imaging.clahe(frame, rows, cols, args.clip_limit)
            frame = imaging.resize_bilinear(frame, args.size, args.size)
            if args.augment is not None:
                frame = imaging.apply_preset(frame, args.augment, args.seed + i)
            ext = Path(entry.frame_paths[i]).suffix or ".png"
            rel = f"frames/{entry.sequence_id}_{i:03d}{ext}"
            imaging.save_frame(frame, args.out / rel)
            new_paths.append(rel)
        new_entries.append(
            dataio.SequenceEntry(
                sequence_id=entry.sequence_id,
                subject_id=entry.subject_id,
                condition=entry.condition,
                device=entry.device,
                split=entry.split,
                frame_paths=tuple(new_paths),
                frame_timestamps_ms=entry.frame_timestamps_ms,
            )
        )
    out_manifest = dataio.DatasetManifest(entries=tuple(new_entries), base_dir=args.out)
    dataio.save_manifest(out_manifest, args.out / "manifest.json")
    print(f"wrote {sum(len(e.frame_paths) for e in new_entries)} frames to {args.out}")
    return 0


def _strategy_from_args(args) -> quality.SelectionStrategy:
    if args.strategy == "best":
        return quality.BestSharpness(k=args.k, sigma=args.log_sigma)
    if args.strategy == "random":
        return quality.RandomK(k=args.k, seed=args.seed)
    return quality.SequentialFirst(k=args.k)


def _cmd_select(args) -> int:
    manifest = dataio.load_manifest(args.manifest)
    strategy = _strategy_from_args(args)
    selections = {}
    for entry in sorted(manifest.entries, key=lambda e: e.sequence_id):
        seq = dataio.load_sequence(manifest, entry)
        selections[entry.sequence_id] = quality.select_frames(seq, strategy)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(
        json.dumps({"version": 1, "selections": selections}, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    print(f"selected frames for {len(selections)} sequences -> {args.out}")
    return 0


def _load_selection(path: Path) -> dict[str, list[int]]:
    raw = json.loads(path.read_text(encoding="utf-8"))
    return {str(k): [int(i) for i in v] for k, v in raw["selections"].items()}


def _cmd_score(args) -> int:
    manifest = dataio.load_manifest(args.manifest)
    if args.source == "cnn":
        if args.weights is None:
            raise ParameterError("--source cnn requires --weights")
        spec_path = args.spec if args.spec is not None else default_spec_path()
        scorer = CnnScorer(
            NetworkSpec.from_file(spec_path), read_bundle(args.weights), apply_clahe=args.clahe
        )
    else:
        if args.playback is None:
            raise ParameterError("--source playback requires --playback")
        scorer = PlaybackScorer(args.playback)

    selection = _load_selection(args.selection) if args.selection else None
    entries = sorted(manifest.entries, key=lambda e: e.sequence_id)

    def score_entry(entry) -> list[dataio.ScoreRow]:
        indices = (
            selection.get(entry.sequence_id, [])
            if selection is not None
            else range(len(entry.frame_paths))
        )
        return [
            dataio.ScoreRow(entry.sequence_id, i, scorer.scores_for(manifest, entry, i))
            for i in indices
        ]

    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            per_entry = list(pool.map(score_entry, entries))
    else:
        per_entry = [score_entry(e) for e in entries]

    rows = [row for chunk in per_entry for row in chunk]
    rows.sort(key=lambda r: (r.sequence_id, r.frame_index))
    args.out.parent.mkdir(parents=True, exist_ok=True)
    dataio.write_score_csv(args.out, rows)
    print(f"scored {len(rows)} frames -> {args.out}")
    return 0


def _fuse_rows(
    score_rows: list[dataio.ScoreRow],
    manifest: dataio.DatasetManifest,
    policy: decision.FusionPolicy,
    k: int | None,
) -> list[dataio.FusedRow]:
    by_sequence: dict[str, list[dataio.ScoreRow]] = {}
    for row in score_rows:
        by_sequence.setdefault(row.sequence_id, []).append(row)
    entry_by_id = {e.sequence_id: e for e in manifest.entries}
    fused_rows = []
    for sequence_id in sorted(by_sequence):
        if sequence_id not in entry_by_id:
            raise ParameterError(f"score row references unknown sequence '{sequence_id}'")
        rows = sorted(by_sequence[sequence_id], key=lambda r: r.frame_index)
        if k is not None:
            rows = rows[:k]
        fused = decision.fuse([r.scores for r in rows], policy)
        fused_rows.append(
            dataio.FusedRow(
                sequence_id=sequence_id,
                condition=entry_by_id[sequence_id].condition,
                scores=fused,
                unfit_score=decision.unfit_score(fused),
            )
        )
    return fused_rows


def _items_from_fused(rows: list[dataio.FusedRow]) -> list[evaluation.ScoredItem]:
    return [evaluation.ScoredItem(truth=r.condition, scores=r.scores) for r in rows]


def _cmd_fuse(args) -> int:
    manifest = dataio.load_manifest(args.manifest)
    policy = decision.FusionPolicy.from_name(args.policy)
    fused_rows = _fuse_rows(dataio.read_score_csv(args.scores), manifest, policy, args.k)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    dataio.write_fused_csv(args.out, fused_rows)
    print(f"fused {len(fused_rows)} sequences -> {args.out}")

    threshold = args.threshold
    if args.at_eer is not None:
        val_items = _items_from_fused(dataio.read_fused_csv(args.at_eer))
        threshold = evaluation.eer_point(evaluation.det_curve(val_items)).threshold
        print(f"threshold from validation EER point: {threshold!r}")
    if threshold is not None and args.decisions is not None:
        lines = ["sequence_id,condition,unfit_score,predicted,verdict,threshold"]
        for r in fused_rows:
            d = decision.decide([r.scores], policy, threshold)
            lines.append(
                f"{r.sequence_id},{r.condition.canonical_name},{r.unfit_score!r},"
                f"{d.predicted_class.canonical_name},{d.verdict.value},{threshold!r}"
            )
        args.decisions.write_text("\n".join(lines) + "\n", encoding="utf-8")
        print(f"wrote decisions -> {args.decisions}")
    return 0


def _write_eval_outputs(out_dir: Path, items: list[evaluation.ScoredItem], positive: str) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    if positive == "unfit":
        report = evaluation.evaluate(items)
        curve = report.curve
        (out_dir / "report.json").write_text(evaluation.report_json(report), encoding="utf-8")
        (out_dir / "report.md").write_text(evaluation.report_markdown(report), encoding="utf-8")
        print(
            f"EER {100 * report.eer:.2f}%  FNR@10% {100 * report.fnr10:.2f}%  "
            f"FNR@5% {100 * report.fnr20:.2f}%"
        )
    else:
        label = ConditionLabel.from_name(positive)
        curve = evaluation.det_curve(items, positive=label)
        ep = evaluation.eer_point(curve)
        payload = {
            "positive": positive,
            "eer": ep.value,
            "threshold": ep.threshold,
            "fnr10": evaluation.fnr_at_fpr(curve, evaluation.FNR10_TARGET).value,
            "fnr20": evaluation.fnr_at_fpr(curve, evaluation.FNR20_TARGET).value,
        }
        (out_dir / "report.json").write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        print(f"{positive} vs control: EER {100 * ep.value:.2f}%")
    (out_dir / "det.csv").write_text(evaluation.det_csv(curve), encoding="utf-8")
    (out_dir / "det.svg").write_text(evaluation.det_svg(curve), encoding="utf-8")


def _cmd_eval(args) -> int:
    items = _items_from_fused(dataio.read_fused_csv(args.fused))
    _write_eval_outputs(args.out, items, args.positive)
    return 0


def _cmd_report(args) -> int:
    manifest = dataio.load_manifest(args.manifest)
    policy = decision.FusionPolicy.from_name(args.policy)
    fused_rows = _fuse_rows(dataio.read_score_csv(args.scores), manifest, policy, args.k)
    args.out.mkdir(parents=True, exist_ok=True)
    dataio.write_fused_csv(args.out / "fused.csv", fused_rows)
    _write_eval_outputs(args.out, _items_from_fused(fused_rows), "unfit")
    print(f"report bundle -> {args.out}")
    return 0


def _split_for_subject(index: int, total: int) -> str:
    if index < 0.7 * total:
        return "train"
    if index < 0.85 * total:
        return "validation"
    return "test"


def _cmd_synth_frames(args) -> int:
    frames_dir = args.out / "frames"
    frames_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    seq_index = 0
    for subject in range(args.subjects):
        condition = CODE_ORDER[subject % 4]
        split = _split_for_subject(subject, args.subjects)
        for _ in range(args.sequences_per_subject):
            sequence_id = f"seq{seq_index:04d}"
            rng = np.random.default_rng(args.seed * 1_000_003 + seq_index)
            lo, hi = SYNTH_P_RANGES[condition]
            paths = []
            for i in range(args.frames):
                # narrow iris-radius band keeps the pupil-ratio class signal visible
                params = harness.SyntheticEyeParams(
                    width=args.size,
                    height=args.size,
                    iris_radius=float(rng.uniform(args.size * 0.34, args.size * 0.42)),
                    pupil_ratio=float(rng.uniform(lo, hi)),
                    blur_sigma=float(rng.uniform(0.4, 1.0)),
                    noise_std=float(rng.uniform(4.0, 9.0)),
                    seed=int(rng.integers(0, 2**31)),
                )
                rel = f"frames/{sequence_id}_{i:02d}.{args.format}"
                imaging.save_frame(harness.synth_frame(params), args.out / rel)
                paths.append(rel)
            entries.append(
                dataio.SequenceEntry(
                    sequence_id=sequence_id,
                    subject_id=f"subj{subject:03d}",
                    condition=condition,
                    device="synthetic",
                    split=split,
                    frame_paths=tuple(paths),
                    frame_timestamps_ms=tuple(_FRAME_INTERVAL_MS * i for i in range(args.frames)),
                )
            )
            seq_index += 1
    manifest = dataio.DatasetManifest(entries=tuple(entries), base_dir=args.out)
    dataio.save_manifest(manifest, args.out / "manifest.json")
    print(f"wrote {seq_index} sequences ({seq_index * args.frames} frames) to {args.out}")
    return 0


def _cmd_synth_scores(args) -> int:
    args.out.mkdir(parents=True, exist_ok=True)
    means = {label: args.unfit_mean for label in CODE_ORDER}
    means[ConditionLabel.CONTROL] = args.control_mean
    stds = {label: args.std for label in CODE_ORDER}
    unfit_share = (1.0 - args.control_share) / 3.0
    proportions = {label: unfit_share for label in CODE_ORDER}
    proportions[ConditionLabel.CONTROL] = args.control_share

    rng = np.random.default_rng(args.seed)
    codes = rng.choice(
        np.array([int(label) for label in CODE_ORDER]),
        size=args.sequences,
        p=[proportions[label] for label in CODE_ORDER],
    )
    entries = []
    rows = []
    for s, code in enumerate(codes):
        condition = ConditionLabel(int(code))
        sequence_id = f"seq{s:05d}"
        paths = tuple(f"frames/{sequence_id}_{i:02d}.pgm" for i in range(args.frames))
        entries.append(
            dataio.SequenceEntry(
                sequence_id=sequence_id,
                subject_id=f"subj{s:05d}",
                condition=condition,
                device="synthetic",
                split="test",
                frame_paths=paths,
                frame_timestamps_ms=tuple(_FRAME_INTERVAL_MS * i for i in range(args.frames)),
            )
        )
        for i in range(args.frames):
            latent = rng.normal(means[condition], stds[condition])
            rows.append(
                dataio.ScoreRow(sequence_id, i, harness.latent_to_scores(condition, latent))
            )
    manifest = dataio.DatasetManifest(entries=tuple(entries), base_dir=args.out)
    dataio.save_manifest(manifest, args.out / "manifest.json")
    dataio.write_score_csv(args.out / "scores.csv", rows)
    print(f"wrote {args.sequences} sequences and {len(rows)} score rows to {args.out}")
    return 0


def _cmd_synth(args) -> int:
    if args.mode == "frames":
        return _cmd_synth_frames(args)
    return _cmd_synth_scores(args)


def _cmd_weights_info(args) -> int:
    bundle = read_bundle(args.bundle)
    if args.json:
        payload = {
            "epsilon": bundle.epsilon,
            "tensor_count": len(bundle.tensors),
            "tensors": {
                name: {
                    "shape": list(t.shape),
                    "min": float(t.min()),
                    "max": float(t.max()),
                    "mean": float(t.mean()),
                }
                for name, t in bundle.tensors.items()
            },
        }
        print(json.dumps(payload, indent=2, sort_keys=True))
        return 0
    print(f"epsilon: {bundle.epsilon!r}")
    print(f"tensors: {len(bundle.tensors)}")
    for name, t in bundle.tensors.items():
        shape = "x".join(str(d) for d in t.shape)
        print(f"  {name:40s} {shape:>16s}  min {t.min():+.4f}  max {t.max():+.4f}")
    return 0


_COMMANDS = {
    "validate": _cmd_validate,
    "preprocess": _cmd_preprocess,
    "select": _cmd_select,
    "score": _cmd_score,
    "fuse": _cmd_fuse,
    "eval": _cmd_eval,
    "report": _cmd_report,
    "synth": _cmd_synth,
    "weights-info": _cmd_weights_info,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except FfdError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
