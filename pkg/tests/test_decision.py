import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ffdkit.decision import FusionPolicy, Verdict, decide, fuse, unfit_score
from ffdkit.errors import EmptyInputError, ParameterError
from ffdkit.labels import ConditionLabel
from ffdkit.scores import ClassScores


def random_scores(rng) -> ClassScores:
    raw = rng.dirichlet(np.ones(4))
    return ClassScores(*[float(v) for v in raw])


score_vectors = st.lists(
    st.floats(min_value=1e-6, max_value=1.0), min_size=4, max_size=4
).map(lambda raw: ClassScores(*[v / math.fsum(raw) for v in raw]))


class TestFuse:
    def test_singleton_identity_both_policies(self):
        s = ClassScores(0.4, 0.3, 0.2, 0.1)
        assert fuse([s], FusionPolicy.AVERAGE) == s
        assert fuse([s], FusionPolicy.MAX) == s

    def test_average_idempotent_on_copies(self):
        s = ClassScores(0.4, 0.3, 0.2, 0.1)
        for k in (2, 3, 5):
            assert fuse([s] * k, FusionPolicy.AVERAGE) == s

    def test_max_renormalizes_worked_example(self):
        a = ClassScores(0.7, 0.1, 0.1, 0.1)
        b = ClassScores(0.1, 0.7, 0.1, 0.1)
        fused = fuse([a, b], FusionPolicy.MAX)
        # elementwise max (0.7, 0.7, 0.1, 0.1) / 1.6
        assert fused.p_control == pytest.approx(0.4375, abs=1e-12)
        assert fused.p_alcohol == pytest.approx(0.4375, abs=1e-12)
        assert fused.p_drug == pytest.approx(0.0625, abs=1e-12)
        assert fused.p_sleep == pytest.approx(0.0625, abs=1e-12)

    def test_empty_input_rejected(self):
        with pytest.raises(EmptyInputError):
            fuse([], FusionPolicy.MAX)

    def test_permutation_invariance_exact(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            k = int(rng.integers(2, 6))
            frames = [random_scores(rng) for _ in range(k)]
            perm = [frames[i] for i in rng.permutation(k)]
            for policy in FusionPolicy:
                assert fuse(frames, policy) == fuse(perm, policy)

    def test_max_argmax_preserved_by_renormalization(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            k = int(rng.integers(1, 6))
            frames = [random_scores(rng) for _ in range(k)]
            fused = fuse(frames, FusionPolicy.MAX)
            pre_max = np.maximum.reduce([f.by_code() for f in frames])
            assert int(np.argmax(pre_max)) == int(fused.argmax_label())

    @given(st.lists(score_vectors, min_size=1, max_size=6))
    @settings(max_examples=200)
    def test_fused_is_valid_probability_vector(self, frames):
        for policy in FusionPolicy:
            fused = fuse(frames, policy)  # ClassScores validates on build
            total = fused.p_control + fused.p_alcohol + fused.p_drug + fused.p_sleep
            assert total == pytest.approx(1.0, abs=1e-6)

    def test_average_is_elementwise_mean(self):
        a = ClassScores(0.8, 0.1, 0.05, 0.05)
        b = ClassScores(0.2, 0.5, 0.2, 0.1)
        fused = fuse([a, b], FusionPolicy.AVERAGE)
        assert fused.p_control == pytest.approx(0.5, abs=1e-12)
        assert fused.p_alcohol == pytest.approx(0.3, abs=1e-12)

    def test_policy_parsing(self):
        assert FusionPolicy.from_name("max") is FusionPolicy.MAX
        assert FusionPolicy.from_name("avg") is FusionPolicy.AVERAGE
        assert FusionPolicy.from_name("AVERAGE") is FusionPolicy.AVERAGE
        with pytest.raises(ParameterError):
            FusionPolicy.from_name("median")


class TestUnfitScore:
    def test_pure_control_is_zero(self):
        assert unfit_score(ClassScores(1.0, 0.0, 0.0, 0.0)) == 0.0

    def test_pure_alcohol_is_one(self):
        assert unfit_score(ClassScores(0.0, 1.0, 0.0, 0.0)) == 1.0

    def test_uniform_is_three_quarters(self):
        assert unfit_score(ClassScores(0.25, 0.25, 0.25, 0.25)) == 0.75

    def test_complements_control_mass(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            s = random_scores(rng)
            assert unfit_score(s) == pytest.approx(1.0 - s.p_control, abs=1e-9)


class TestDecide:
    def test_pure_control_is_fit(self):
        frames = [ClassScores(1.0, 0.0, 0.0, 0.0)] * 3
        d = decide(frames, FusionPolicy.AVERAGE, threshold=0.5)
        assert d.verdict is Verdict.FIT
        assert d.predicted_class is ConditionLabel.CONTROL

    def test_pure_drug_is_unfit(self):
        frames = [ClassScores(0.0, 0.0, 1.0, 0.0)] * 3
        d = decide(frames, FusionPolicy.MAX, threshold=0.5)
        assert d.verdict is Verdict.UNFIT
        assert d.predicted_class is ConditionLabel.DRUG

    def test_composition_matches_hand_chain(self):
        frames = [
            ClassScores(0.5, 0.2, 0.2, 0.1),
            ClassScores(0.3, 0.4, 0.2, 0.1),
            ClassScores(0.6, 0.1, 0.2, 0.1),
        ]
        threshold = 0.45
        d = decide(frames, FusionPolicy.AVERAGE, threshold)
        fused = fuse(frames, FusionPolicy.AVERAGE)
        u = unfit_score(fused)
        assert d.fused == fused
        assert d.unfit_score == u
        assert d.verdict is (Verdict.UNFIT if u >= threshold else Verdict.FIT)
        assert d.predicted_class == fused.argmax_label()

    def test_verdict_monotone_in_threshold(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            frames = [random_scores(rng) for _ in range(3)]
            thresholds = sorted(rng.random(4))
            verdicts = [
                decide(frames, FusionPolicy.AVERAGE, t).verdict for t in thresholds
            ]
            # once Fit at some threshold, higher thresholds stay Fit
            seen_fit = False
            for v in verdicts:
                if seen_fit:
                    assert v is Verdict.FIT
                seen_fit = seen_fit or v is Verdict.FIT

    def test_boundary_is_unfit(self):
        frames = [ClassScores(0.5, 0.5, 0.0, 0.0)]
        assert decide(frames, FusionPolicy.AVERAGE, 0.5).verdict is Verdict.UNFIT

    def test_threshold_validated(self):
        with pytest.raises(ParameterError):
            decide([ClassScores(1.0, 0.0, 0.0, 0.0)], FusionPolicy.MAX, 1.5)

    def test_argmax_tie_prefers_lowest_class_code(self):
        s = ClassScores(0.25, 0.25, 0.25, 0.25)
        assert s.argmax_label() is ConditionLabel.ALCOHOL  # code 0
