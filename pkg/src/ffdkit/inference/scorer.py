"""Per-frame score providers: live CNN inference or score-file playback."""

from __future__ import annotations

from pathlib import Path

from ..dataio import DatasetManifest, SequenceEntry, read_score_csv
from ..errors import MissingScoreError, ParameterError, ScoreFileError
from ..imaging import GrayFrame, clahe, load_frame, resize_bilinear, to_tensor
from ..scores import ClassScores
from .bundle import WeightBundle
from .network import FoldedNetwork, NetworkSpec


class PlaybackScorer:
    """Replays scores from a CSV keyed by (sequence_id, frame_index)."""

    def __init__(self, path: str | Path):
        self._rows: dict[tuple[str, int], ClassScores] = {}
        for row in read_score_csv(path):
            key = (row.sequence_id, row.frame_index)
            if key in self._rows:
                raise ScoreFileError(
                    f"{path}: duplicate row for sequence '{key[0]}' frame {key[1]}"
                )
            self._rows[key] = row.scores

    def scores_for(
        self, manifest: DatasetManifest, entry: SequenceEntry, frame_index: int
    ) -> ClassScores:
        try:
            return self._rows[(entry.sequence_id, frame_index)]
        except KeyError:
            raise MissingScoreError(
                f"no score row for sequence '{entry.sequence_id}' frame {frame_index}"
            ) from None


class CnnScorer:
    """Scores frames with the forward-pass engine.

    Frames are resized to the spec's input size and replicated to three
    channels; CLAHE is applied first when ``apply_clahe`` is set (use this
    when scoring raw rather than pre-processed frames).
    """

    def __init__(
        self,
        spec: NetworkSpec,
        bundle: WeightBundle,
        apply_clahe: bool = False,
        clip_limit: float = 2.0,
        grid: tuple[int, int] = (8, 8),
    ):
        self.network = FoldedNetwork(spec, bundle)
        self.apply_clahe = apply_clahe
        self.clip_limit = clip_limit
        self.grid = grid

    def score_frame(self, frame: GrayFrame) -> ClassScores:
        if self.apply_clahe:
            frame = clahe(frame, self.grid[0], self.grid[1], self.clip_limit)
        size = self.network.spec.input_size
        if (frame.width, frame.height) != (size, size):
            frame = resize_bilinear(frame, size, size)
        return self.network.forward(to_tensor(frame, channels=3))

    def scores_for(
        self, manifest: DatasetManifest, entry: SequenceEntry, frame_index: int
    ) -> ClassScores:
        return self.score_frame(load_frame(manifest.resolve_frame_path(entry, frame_index)))


def score_source(
    kind: str,
    spec: NetworkSpec | None = None,
    bundle: WeightBundle | None = None,
    score_file: str | Path | None = None,
    **cnn_options,
):
    """Build a scorer: kind='cnn' needs spec+bundle, 'playback' a score file."""
    if kind == "cnn":
        if spec is None or bundle is None:
            raise ParameterError("cnn source requires a network spec and weight bundle")
        return CnnScorer(spec, bundle, **cnn_options)
    if kind == "playback":
        if score_file is None:
            raise ParameterError("playback source requires a score file")
        return PlaybackScorer(score_file)
    raise ParameterError(f"unknown score source '{kind}' (expected cnn or playback)")
