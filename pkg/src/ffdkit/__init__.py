"""Fitness-for-duty screening pipeline for NIR periocular frames.

Batch library and CLI covering frame preprocessing (CLAHE, resize,
augmentation), sharpness-based frame selection, from-scratch CNN scoring
with a portable weight format, multi-frame score fusion, Fit/Unfit
decisions, and DET/EER/FNR evaluation.
"""

from .dataio import (
    ClassCounts,
    ClassWeights,
    DatasetManifest,
    FrameSequence,
    SequenceEntry,
    compute_class_weights,
    load_manifest,
    validate_splits,
)
from .decision import FfdDecision, FusionPolicy, Verdict, decide, fuse, unfit_score
from .evaluation import (
    DetCurve,
    EvalReport,
    ScoredItem,
    confusion2,
    confusion4,
    det_curve,
    eer,
    eer_point,
    evaluate,
    fnr_at_fpr,
)
from .harness import ScoreSamplerParams, SyntheticEyeParams, synth_frame, synth_scores
from .imaging import GrayFrame, ImageTensor, clahe, resize_bilinear, to_tensor
from .inference import (
    NetworkSpec,
    WeightBundle,
    forward,
    random_bundle,
    read_bundle,
    score_source,
    width_scaled_channels,
    write_bundle,
)
from .labels import FIT_LABELS, UNFIT_LABELS, ConditionLabel
from .quality import BestSharpness, RandomK, SequentialFirst, select_frames, sharpness
from .scores import ClassScores

__version__ = "0.1.0"

__all__ = [
    "BestSharpness",
    "ClassCounts",
    "ClassScores",
    "ClassWeights",
    "ConditionLabel",
    "DatasetManifest",
    "DetCurve",
    "EvalReport",
    "FIT_LABELS",
    "FfdDecision",
    "FrameSequence",
    "FusionPolicy",
    "GrayFrame",
    "ImageTensor",
    "NetworkSpec",
    "RandomK",
    "ScoreSamplerParams",
    "ScoredItem",
    "SequenceEntry",
    "SequentialFirst",
    "SyntheticEyeParams",
    "UNFIT_LABELS",
    "Verdict",
    "WeightBundle",
    "clahe",
    "compute_class_weights",
    "confusion2",
    "confusion4",
    "decide",
    "det_curve",
    "eer",
    "eer_point",
    "evaluate",
    "fnr_at_fpr",
    "forward",
    "fuse",
    "load_manifest",
    "random_bundle",
    "read_bundle",
    "resize_bilinear",
    "score_source",
    "select_frames",
    "sharpness",
    "synth_frame",
    "synth_scores",
    "to_tensor",
    "unfit_score",
    "validate_splits",
    "width_scaled_channels",
    "write_bundle",
]
