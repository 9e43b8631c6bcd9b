import struct

import numpy as np
import pytest

from ffdkit.dataio import DatasetManifest, ScoreRow, SequenceEntry, write_score_csv
from ffdkit.errors import MissingScoreError, ParameterError, ScoreFileError, WeightsError
from ffdkit.imaging import GrayFrame, save_frame, to_tensor
from ffdkit.inference import (
    CnnScorer,
    NetworkSpec,
    PlaybackScorer,
    WeightBundle,
    random_bundle,
    read_bundle,
    score_source,
    write_bundle,
)
from ffdkit.inference.network import BlockDef, HeadDef, StemDef, forward
from ffdkit.labels import ConditionLabel
from ffdkit.scores import ClassScores


def tiny_spec():
    return NetworkSpec(
        alpha=1.0,
        input_size=16,
        stem=StemDef(out_ch=8, kernel=3, stride=2),
        blocks=(BlockDef(t=1, c=8, n=1, s=1),),
        head=HeadDef(conv_ch=16, pooling="flatten"),
    )


class TestBundleFormat:
    def test_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        bundle = WeightBundle(
            epsilon=1e-3,
            tensors={
                "a/kernel": rng.standard_normal((3, 3, 2, 4)).astype(np.float32),
                "b/bias": rng.standard_normal(4).astype(np.float32),
                "scalarish": rng.standard_normal(1).astype(np.float32),
            },
        )
        path = tmp_path / "w.ffdw"
        write_bundle(path, bundle)
        loaded = read_bundle(path)
        assert loaded.epsilon == np.float32(1e-3)
        assert list(loaded.tensors) == list(bundle.tensors)
        for name in bundle.tensors:
            assert np.array_equal(loaded.tensors[name], bundle.tensors[name])

    def test_header_layout_golden_bytes(self, tmp_path):
        bundle = WeightBundle(
            epsilon=0.5, tensors={"k": np.array([1.0, 2.0], dtype=np.float32)}
        )
        path = tmp_path / "w.ffdw"
        write_bundle(path, bundle)
        data = path.read_bytes()
        expected = (
            b"FFDW"
            + struct.pack("<I", 1)          # version
            + struct.pack("<f", 0.5)        # epsilon
            + struct.pack("<I", 1)          # tensor count
            + struct.pack("<H", 1) + b"k"   # name
            + struct.pack("<B", 1)          # ndim
            + struct.pack("<I", 2)          # dim
            + struct.pack("<2f", 1.0, 2.0)  # values
        )
        assert data == expected

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "w.ffdw"
        path.write_bytes(b"NOPE" + b"\x00" * 16)
        with pytest.raises(WeightsError, match="magic"):
            read_bundle(path)

    def test_truncated_file_rejected(self, tmp_path):
        bundle = WeightBundle(tensors={"k": np.ones(8, dtype=np.float32)})
        path = tmp_path / "w.ffdw"
        write_bundle(path, bundle)
        path.write_bytes(path.read_bytes()[:-5])
        with pytest.raises(WeightsError, match="truncated"):
            read_bundle(path)

    def test_trailing_bytes_rejected(self, tmp_path):
        bundle = WeightBundle(tensors={"k": np.ones(2, dtype=np.float32)})
        path = tmp_path / "w.ffdw"
        write_bundle(path, bundle)
        path.write_bytes(path.read_bytes() + b"\x00")
        with pytest.raises(WeightsError, match="trailing"):
            read_bundle(path)

    def test_empty_bundle_valid(self, tmp_path):
        path = tmp_path / "w.ffdw"
        write_bundle(path, WeightBundle(epsilon=1e-3, tensors={}))
        loaded = read_bundle(path)
        assert loaded.tensors == {}

    def test_random_bundle_covers_spec(self):
        spec = tiny_spec()
        bundle = random_bundle(spec, seed=1)
        required = spec.required_tensors()
        assert set(bundle.tensors) == set(required)
        for name, shape in required.items():
            assert bundle.tensors[name].shape == shape
        assert np.all(bundle.tensors["stem/var"] > 0)

    def test_random_bundle_deterministic(self):
        spec = tiny_spec()
        a = random_bundle(spec, seed=9)
        b = random_bundle(spec, seed=9)
        for name in a.tensors:
            assert np.array_equal(a.tensors[name], b.tensors[name])


def one_entry_manifest(tmp_path, n_frames=2):
    frame_paths = tuple(f"f{i}.pgm" for i in range(n_frames))
    entry = SequenceEntry(
        sequence_id="s1",
        subject_id="subj1",
        condition=ConditionLabel.CONTROL,
        device="synthetic",
        split="test",
        frame_paths=frame_paths,
    )
    rng = np.random.default_rng(2)
    for p in frame_paths:
        save_frame(GrayFrame(rng.integers(0, 256, (16, 16), dtype=np.uint8)), tmp_path / p)
    return DatasetManifest(entries=(entry,), base_dir=tmp_path)


class TestPlaybackScorer:
    def test_single_row_playback(self, tmp_path):
        scores = ClassScores(0.7, 0.1, 0.1, 0.1)
        path = tmp_path / "scores.csv"
        write_score_csv(path, [ScoreRow("s1", 0, scores)])
        scorer = PlaybackScorer(path)
        manifest = one_entry_manifest(tmp_path)
        assert scorer.scores_for(manifest, manifest.entries[0], 0) == scores

    def test_unnormalized_row_rejected(self, tmp_path):
        path = tmp_path / "scores.csv"
        path.write_text(
            "sequence_id,frame_index,p_control,p_alcohol,p_drug,p_sleep\n"
            "s1,0,0.6,0.1,0.1,0.1\n"
        )
        with pytest.raises(ScoreFileError):
            PlaybackScorer(path)

    def test_missing_row_identifies_frame(self, tmp_path):
        path = tmp_path / "scores.csv"
        write_score_csv(path, [ScoreRow("s1", 0, ClassScores(0.25, 0.25, 0.25, 0.25))])
        scorer = PlaybackScorer(path)
        manifest = one_entry_manifest(tmp_path)
        with pytest.raises(MissingScoreError, match=r"s1.*1"):
            scorer.scores_for(manifest, manifest.entries[0], 1)

    def test_duplicate_row_rejected(self, tmp_path):
        path = tmp_path / "scores.csv"
        write_score_csv(
            path,
            [
                ScoreRow("s1", 0, ClassScores(0.25, 0.25, 0.25, 0.25)),
                ScoreRow("s1", 0, ClassScores(0.7, 0.1, 0.1, 0.1)),
            ],
        )
        with pytest.raises(ScoreFileError, match="duplicate"):
            PlaybackScorer(path)


class TestCnnScorer:
    def test_equals_direct_forward(self, tmp_path):
        spec = tiny_spec()
        bundle = random_bundle(spec, seed=3)
        manifest = one_entry_manifest(tmp_path)
        scorer = CnnScorer(spec, bundle)
        got = scorer.scores_for(manifest, manifest.entries[0], 0)
        from ffdkit.imaging import load_frame

        frame = load_frame(tmp_path / "f0.pgm")
        expected = forward(to_tensor(frame, 3), spec, bundle)
        assert got == expected

    def test_resizes_when_needed(self, tmp_path):
        spec = tiny_spec()
        bundle = random_bundle(spec, seed=4)
        scorer = CnnScorer(spec, bundle)
        rng = np.random.default_rng(5)
        frame = GrayFrame(rng.integers(0, 256, (40, 28), dtype=np.uint8))
        scores = scorer.score_frame(frame)
        assert scores.p_control >= 0.0


class TestScoreSourceFactory:
    def test_cnn_requires_spec_and_bundle(self):
        with pytest.raises(ParameterError):
            score_source("cnn")

    def test_playback_requires_file(self):
        with pytest.raises(ParameterError):
            score_source("playback")

    def test_unknown_kind(self):
        with pytest.raises(ParameterError):
            score_source("magic")

    def test_builds_both_kinds(self, tmp_path):
        spec = tiny_spec()
        assert isinstance(score_source("cnn", spec=spec, bundle=random_bundle(spec)), CnnScorer)
        path = tmp_path / "scores.csv"
        write_score_csv(path, [ScoreRow("s1", 0, ClassScores(0.25, 0.25, 0.25, 0.25))])
        assert isinstance(score_source("playback", score_file=path), PlaybackScorer)
