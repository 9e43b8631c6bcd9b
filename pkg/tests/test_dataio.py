import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ffdkit.dataio import (
    ClassCounts,
    DatasetManifest,
    SequenceEntry,
    compute_class_weights,
    load_manifest,
    parse_manifest,
    read_score_csv,
    validate_splits,
    write_score_csv,
    ScoreRow,
)
from ffdkit.errors import (
    DegenerateClassError,
    DuplicateSequenceError,
    ManifestError,
    ScoreFileError,
    SubjectOverlapError,
)
from ffdkit.labels import ConditionLabel
from ffdkit.scores import ClassScores

from oracles import split_map_violations


def entry_dict(seq="s1", subject="subjA", condition="control", split="train", frames=2):
    return {
        "sequence_id": seq,
        "subject_id": subject,
        "condition": condition,
        "device": "mk2120ul",
        "split": split,
        "frame_paths": [f"frames/{seq}_{i}.png" for i in range(frames)],
    }


def write_manifest(tmp_path, entries):
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps({"version": 1, "entries": entries}))
    return path


class TestManifest:
    def test_round_trip_two_entries(self, tmp_path):
        path = write_manifest(
            tmp_path,
            [entry_dict("s1", "subjA"), entry_dict("s2", "subjB", condition="drug", split="test")],
        )
        manifest = load_manifest(path)
        assert len(manifest) == 2
        assert manifest.entry("s1").subject_id == "subjA"
        assert manifest.entry("s2").condition == ConditionLabel.DRUG
        assert manifest.base_dir == tmp_path

    def test_subject_in_two_splits_rejected(self, tmp_path):
        path = write_manifest(
            tmp_path,
            [entry_dict("s1", "S01", split="train"), entry_dict("s2", "S01", split="test")],
        )
        with pytest.raises(SubjectOverlapError) as excinfo:
            load_manifest(path)
        assert "S01" in str(excinfo.value)

    def test_empty_manifest_is_valid(self, tmp_path):
        manifest = load_manifest(write_manifest(tmp_path, []))
        assert len(manifest) == 0

    def test_duplicate_sequence_id(self, tmp_path):
        path = write_manifest(tmp_path, [entry_dict("s1"), entry_dict("s1")])
        with pytest.raises(DuplicateSequenceError):
            load_manifest(path)

    def test_missing_field_names_entry(self, tmp_path):
        bad = entry_dict("s9")
        del bad["frame_paths"]
        path = write_manifest(tmp_path, [bad])
        with pytest.raises(ManifestError, match="s9"):
            load_manifest(path)

    def test_empty_frame_paths_rejected(self, tmp_path):
        bad = entry_dict("s1")
        bad["frame_paths"] = []
        with pytest.raises(ManifestError):
            load_manifest(write_manifest(tmp_path, [bad]))

    def test_timestamps_must_increase(self, tmp_path):
        bad = entry_dict("s1", frames=3)
        bad["frame_timestamps_ms"] = [0, 100, 100]
        with pytest.raises(ManifestError, match="increasing"):
            load_manifest(write_manifest(tmp_path, [bad]))

    def test_timestamps_length_must_match(self, tmp_path):
        bad = entry_dict("s1", frames=3)
        bad["frame_timestamps_ms"] = [0, 100]
        with pytest.raises(ManifestError):
            load_manifest(write_manifest(tmp_path, [bad]))

    def test_bad_version(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text(json.dumps({"version": 7, "entries": []}))
        with pytest.raises(ManifestError, match="version"):
            load_manifest(path)

    def test_not_json(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text("{nope")
        with pytest.raises(ManifestError):
            load_manifest(path)


def build_manifest(assignments):
    entries = tuple(
        SequenceEntry(
            sequence_id=f"s{i}",
            subject_id=subject,
            condition=ConditionLabel.CONTROL,
            device="",
            split=split,
            frame_paths=("f.png",),
        )
        for i, (subject, split) in enumerate(assignments)
    )
    return DatasetManifest(entries=entries)


class TestValidateSplits:
    def test_disjoint_is_clean(self):
        manifest = build_manifest([("a", "train"), ("a", "train"), ("b", "test")])
        assert validate_splits(manifest) == []

    def test_single_violation(self):
        manifest = build_manifest([("a", "train"), ("a", "validation")])
        violations = validate_splits(manifest)
        assert len(violations) == 1
        assert violations[0].subject_id == "a"
        assert violations[0].splits == frozenset({"train", "validation"})

    def test_random_assignments_match_oracle(self):
        rng = np.random.default_rng(7)
        splits = ("train", "validation", "test")
        for _ in range(100):
            n = int(rng.integers(1, 40))
            assignments = [
                (f"subj{rng.integers(0, 12)}", splits[rng.integers(0, 3)]) for _ in range(n)
            ]
            expected = split_map_violations(assignments)
            got = validate_splits(build_manifest(assignments))
            assert {v.subject_id: set(v.splits) for v in got} == expected


class TestClassWeights:
    def test_published_train_counts_to_4_significant_figures(self):
        counts = ClassCounts(alcohol=24325, control=21449, drug=8653, sleepiness=8568)
        assert counts.total == 62995
        w = compute_class_weights(counts)
        assert w.alcohol == pytest.approx(0.6474, abs=5e-5)
        assert w.control == pytest.approx(0.7342, abs=5e-5)
        assert w.drug == pytest.approx(1.820, abs=5e-4)
        assert w.sleepiness == pytest.approx(1.838, abs=5e-4)

    def test_balanced_counts_give_unit_weights(self):
        for n in (1, 7, 500):
            w = compute_class_weights(ClassCounts(n, n, n, n))
            assert (w.alcohol, w.control, w.drug, w.sleepiness) == (1.0, 1.0, 1.0, 1.0)

    def test_direct_formula(self):
        counts = ClassCounts(alcohol=2, control=1, drug=1, sleepiness=1)
        w = compute_class_weights(counts)
        # total 5, weight_i = 5 / (4 * count_i), evaluated independently
        assert w.alcohol == 5 / 8
        assert w.control == 5 / 4
        assert w.drug == 5 / 4
        assert w.sleepiness == 5 / 4

    def test_zero_count_rejected(self):
        with pytest.raises(DegenerateClassError, match="drug"):
            compute_class_weights(ClassCounts(alcohol=5, control=5, drug=0, sleepiness=5))

    @given(
        st.lists(st.integers(min_value=1, max_value=10**9), min_size=4, max_size=4)
    )
    @settings(max_examples=200)
    def test_weight_identity(self, raw):
        counts = ClassCounts(*raw)
        w = compute_class_weights(counts)
        total = sum(
            w.for_label(label) * counts.for_label(label) for label in ConditionLabel
        )
        assert total == pytest.approx(counts.total, rel=1e-12)

    @given(
        st.lists(st.integers(min_value=1, max_value=10**6), min_size=4, max_size=4)
    )
    @settings(max_examples=200)
    def test_weight_monotonicity(self, raw):
        counts = ClassCounts(*raw)
        w = compute_class_weights(counts)
        for a in ConditionLabel:
            for b in ConditionLabel:
                if counts.for_label(a) < counts.for_label(b):
                    assert w.for_label(a) > w.for_label(b)

    def test_counts_from_manifest(self):
        manifest = build_manifest([("a", "train"), ("b", "train"), ("c", "test")])
        counts = ClassCounts.from_manifest(manifest, "train")
        assert counts.control == 2  # one frame each
        assert counts.alcohol == 0


class TestScoreCsv:
    def test_round_trip(self, tmp_path):
        rows = [
            ScoreRow("s1", 0, ClassScores(0.25, 0.25, 0.25, 0.25)),
            ScoreRow("s1", 1, ClassScores(0.7, 0.1, 0.1, 0.1)),
        ]
        path = tmp_path / "scores.csv"
        write_score_csv(path, rows)
        assert read_score_csv(path) == rows

    def test_unnormalized_row_rejected(self, tmp_path):
        path = tmp_path / "scores.csv"
        path.write_text(
            "sequence_id,frame_index,p_control,p_alcohol,p_drug,p_sleep\n"
            "s1,0,0.3,0.3,0.2,0.1\n"
        )
        with pytest.raises(ScoreFileError, match="sum"):
            read_score_csv(path)

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "scores.csv"
        path.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(ScoreFileError, match="header"):
            read_score_csv(path)


def test_parse_manifest_leaves_split_check_to_caller():
    raw = {
        "version": 1,
        "entries": [entry_dict("s1", "X", split="train"), entry_dict("s2", "X", split="test")],
    }
    manifest = parse_manifest(raw)
    assert [v.subject_id for v in validate_splits(manifest)] == ["X"]
