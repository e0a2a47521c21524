import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from topicrec.corpus import Corpus, LabelVocab, RepoRecord, generate_synthetic
from topicrec.errors import DataError
from topicrec.sampling import (
    LabelStats,
    build_instance_weights,
    epoch_plan,
    rebalance_weights,
    sampling_frequencies,
    smooth_weight,
)


def corpus_from_counts(counts, extra_multilabel=0, seed=0):
    """Single-label records realizing exactly the requested class counts,
    optionally plus multi-label records (which shift the counts)."""
    vocab = LabelVocab(tuple(f"c{i}" for i in range(len(counts))))
    recs = []
    for cls, n in enumerate(counts):
        for j in range(n):
            recs.append(RepoRecord(f"r{cls}_{j}", f"tok{cls}", frozenset({cls})))
    rng = np.random.default_rng(seed)
    for j in range(extra_multilabel):
        pair = rng.choice(len(counts), size=2, replace=False)
        recs.append(RepoRecord(f"m{j}", "tok", frozenset(int(p) for p in pair)))
    return Corpus(vocab, tuple(recs))


class TestLabelStats:
    def test_visit_budget_is_max_count(self):
        stats = LabelStats.from_counts([5, 3, 1], n_records=9)
        assert stats.visits_per_class == 5

    def test_cap_reduces_budget(self):
        stats = LabelStats.from_counts([5, 3, 1], n_records=9, cap=2)
        assert stats.visits_per_class == 2

    def test_cap_above_max_is_inert(self):
        stats = LabelStats.from_counts([5, 3, 1], n_records=9, cap=100)
        assert stats.visits_per_class == 5

    def test_from_corpus(self):
        corpus = corpus_from_counts([4, 2])
        stats = LabelStats.from_corpus(corpus)
        assert stats.counts.tolist() == [4, 2]
        assert stats.n_records == 6


class TestEpochPlan:
    def test_schedule_length_and_exact_visits(self):
        corpus = corpus_from_counts([5, 3, 1])
        stats = LabelStats.from_corpus(corpus)
        plan = epoch_plan(stats, corpus, seed=0)
        assert len(plan.schedule) == 15
        visits = Counter(cls for cls, _ in plan.schedule)
        assert visits == {0: 5, 1: 5, 2: 5}

    def test_capped_schedule(self):
        corpus = corpus_from_counts([5, 3, 1])
        stats = LabelStats.from_corpus(corpus, cap=2)
        plan = epoch_plan(stats, corpus, seed=0)
        assert len(plan.schedule) == 6
        assert Counter(cls for cls, _ in plan.schedule) == {0: 2, 1: 2, 2: 2}

    def test_deterministic(self):
        corpus = corpus_from_counts([4, 2, 2], extra_multilabel=3)
        stats = LabelStats.from_corpus(corpus)
        assert epoch_plan(stats, corpus, seed=5) == epoch_plan(stats, corpus, seed=5)
        assert epoch_plan(stats, corpus, seed=5) != epoch_plan(stats, corpus, seed=6)

    def test_zero_count_classes_skipped(self):
        corpus = corpus_from_counts([3, 0, 2])
        stats = LabelStats.from_corpus(corpus)
        visited = {cls for cls, _ in epoch_plan(stats, corpus, seed=1).schedule}
        assert visited == {0, 2}

    def test_scheduled_record_carries_class(self):
        corpus = corpus_from_counts([3, 2], extra_multilabel=4)
        stats = LabelStats.from_corpus(corpus)
        by_id = {rec.id: rec for rec in corpus.records}
        for cls, rid in epoch_plan(stats, corpus, seed=2).schedule:
            assert cls in by_id[rid].topics

    def test_all_empty_corpus_rejected(self):
        vocab = LabelVocab(("a",))
        corpus = Corpus(vocab, (RepoRecord("r", "x", frozenset()),))
        stats = LabelStats.from_corpus(corpus)
        with pytest.raises(DataError):
            epoch_plan(stats, corpus, seed=0)

    def test_instance_coverage_statistics(self):
        # a class with n=3 positives visited N_e=20 times hits each positive
        # with probability 1-(2/3)^20 ~ 0.9997; check empirically over seeds
        corpus = corpus_from_counts([20, 3])
        stats = LabelStats.from_corpus(corpus)
        hits = 0
        trials = 200
        targets = {f"r1_{j}" for j in range(3)}
        for seed in range(trials):
            seen = {rid for cls, rid in epoch_plan(stats, corpus, seed).schedule if cls == 1}
            hits += seen == targets
        assert hits / trials >= 0.99


class TestSamplingFrequencies:
    def test_class_level_hand_case(self):
        stats = LabelStats.from_counts([4, 2, 1], n_records=7)
        pc, _ = sampling_frequencies(stats, {0})
        np.testing.assert_allclose(pc, [1 / 12, 1 / 6, 1 / 3], atol=1e-15)

    def test_single_label_instance_equals_class_level(self):
        stats = LabelStats.from_counts([4, 2, 1], n_records=7)
        pc, pi = sampling_frequencies(stats, {1})
        assert pi == pytest.approx(pc[1], abs=1e-15)

    def test_two_label_hand_case(self):
        stats = LabelStats.from_counts([10, 1, 3], n_records=14)
        _, pi = sampling_frequencies(stats, {0, 1})
        assert pi == pytest.approx((11 / 10) / 3, abs=1e-15)

    def test_zero_count_topic_rejected(self):
        stats = LabelStats.from_counts([4, 0], n_records=4)
        with pytest.raises(ValueError):
            sampling_frequencies(stats, {1})


class TestRebalanceWeights:
    def test_single_label_weight_is_one(self):
        stats = LabelStats.from_counts([7, 3], n_records=10)
        assert rebalance_weights(stats, {0}) == {0: 1.0}

    def test_hand_case(self):
        stats = LabelStats.from_counts([10, 1], n_records=11)
        r = rebalance_weights(stats, {0, 1})
        assert r[0] == pytest.approx(1 / 11, abs=1e-12)
        assert r[1] == pytest.approx(10 / 11, abs=1e-12)

    def test_equal_counts_symmetric(self):
        stats = LabelStats.from_counts([5, 5, 5], n_records=15)
        r = rebalance_weights(stats, {0, 1, 2})
        for v in r.values():
            assert v == pytest.approx(1 / 3, abs=1e-15)

    def test_weights_sum_to_one(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            c = int(rng.integers(2, 12))
            counts = rng.integers(1, 50, size=c)
            stats = LabelStats.from_counts(counts, n_records=int(counts.sum()))
            m = int(rng.integers(1, c + 1))
            topics = set(rng.choice(c, size=m, replace=False).tolist())
            r = rebalance_weights(stats, topics)
            assert sum(r.values()) == pytest.approx(1.0, abs=1e-12)
            assert all(0 < v <= 1 for v in r.values())


class TestSmoothWeight:
    def test_midpoint(self):
        assert smooth_weight(0.3, alpha=0.1, beta=10.0, mu=0.3) == pytest.approx(0.6, abs=1e-15)

    def test_saturation(self):
        assert smooth_weight(1.0, alpha=0.1, beta=1e4, mu=0.3) == pytest.approx(1.1, abs=1e-12)

    def test_hand_case(self):
        got = smooth_weight(1.0, alpha=0.1, beta=10.0, mu=0.3)
        assert got == pytest.approx(0.1 + 1 / (1 + math.exp(-7)), abs=1e-12)
        assert got == pytest.approx(1.099089, abs=1e-6)

    def test_negative_beta_rejected(self):
        with pytest.raises(ValueError):
            smooth_weight(0.5, alpha=0.1, beta=-1.0, mu=0.3)

    @given(
        st.floats(0, 1, allow_nan=False),
        st.floats(0, 1, allow_nan=False),
    )
    @settings(max_examples=100)
    def test_monotone(self, r1, r2):
        lo, hi = sorted((r1, r2))
        w_lo = smooth_weight(lo, alpha=0.1, beta=10.0, mu=0.3)
        w_hi = smooth_weight(hi, alpha=0.1, beta=10.0, mu=0.3)
        if hi - lo > 1e-12:  # strictness only claimed above float resolution
            assert w_lo < w_hi
        else:
            assert w_lo <= w_hi


class TestInstanceWeights:
    def test_single_label_positive(self):
        corpus = corpus_from_counts([3, 1])
        stats = LabelStats.from_corpus(corpus)
        w = build_instance_weights(stats, corpus)
        rec = corpus.records[0]  # single positive class 0
        assert w.rhat[rec.id][0] == pytest.approx(
            smooth_weight(1.0, 0.1, 10.0, 0.3), abs=1e-15
        )

    def test_equal_count_pair_symmetric(self):
        vocab = LabelVocab(("a", "b"))
        recs = (
            RepoRecord("m", "x", frozenset({0, 1})),
            RepoRecord("p", "x", frozenset({0})),
            RepoRecord("q", "x", frozenset({1})),
        )
        corpus = Corpus(vocab, recs)
        stats = LabelStats.from_corpus(corpus)
        w = build_instance_weights(stats, corpus)
        expected = smooth_weight(0.5, 0.1, 10.0, 0.3)
        assert w.rhat["m"][0] == pytest.approx(expected, abs=1e-15)
        assert w.rhat["m"][1] == pytest.approx(expected, abs=1e-15)

    def test_hand_case(self):
        # counts (10,1), record with both labels: r = (1/11, 10/11)
        corpus = corpus_from_counts([9, 0])
        recs = corpus.records + (RepoRecord("mix", "x", frozenset({0, 1})),)
        corpus = Corpus(corpus.vocab, recs)
        stats = LabelStats.from_corpus(corpus)
        assert stats.counts.tolist() == [10, 1]
        w = build_instance_weights(stats, corpus, alpha=0.1, beta=10.0, mu=0.3)
        assert w.r["mix"][0] == pytest.approx(1 / 11, abs=1e-12)
        assert w.r["mix"][1] == pytest.approx(10 / 11, abs=1e-12)
        expected = 0.1 + 1 / (1 + math.exp(-10 * (1 / 11 - 0.3)))
        assert w.rhat["mix"][0] == pytest.approx(expected, abs=1e-12)
        assert w.rhat["mix"][0] == pytest.approx(0.21, abs=1e-3)

    def test_bounds_strict(self):
        corpus = generate_synthetic(12, 150, 1.1, (1, 3), seed=3)
        stats = LabelStats.from_corpus(corpus)
        w = build_instance_weights(stats, corpus, alpha=0.1)
        for vec in w.rhat.values():
            assert np.all(vec > 0.1) and np.all(vec < 1.1)

    def test_zero_positive_record_sentinel(self):
        vocab = LabelVocab(("a",))
        recs = (RepoRecord("p", "x", frozenset({0})), RepoRecord("none", "x", frozenset()))
        corpus = Corpus(vocab, recs)
        stats = LabelStats.from_corpus(corpus)
        w = build_instance_weights(stats, corpus, alpha=0.1)
        np.testing.assert_allclose(w.rhat["none"], 0.6, atol=1e-15)

    def test_negative_weight_modes(self):
        corpus = corpus_from_counts([9, 0])
        recs = corpus.records + (RepoRecord("mix", "x", frozenset({0, 1})),)
        corpus = Corpus(corpus.vocab, recs)
        stats = LabelStats.from_corpus(corpus)
        w_min = build_instance_weights(stats, corpus, negative_mode="min_positive")
        w_const = build_instance_weights(stats, corpus, negative_mode="constant")
        w_one = build_instance_weights(stats, corpus, negative_mode="one")
        smoothed_min = smooth_weight(1 / 11, 0.1, 10.0, 0.3)
        # class 1 is positive on "mix"; a single-label record's negatives differ by mode
        rid = "r0_0"
        assert w_min.rhat[rid][1] == pytest.approx(smooth_weight(1.0, 0.1, 10.0, 0.3), abs=1e-15)
        assert w_const.rhat[rid][1] == pytest.approx(0.6, abs=1e-15)
        assert w_one.rhat[rid][1] == 1.0
        assert w_min.rhat["mix"][0] == pytest.approx(smoothed_min, abs=1e-15)
        with pytest.raises(ValueError):
            build_instance_weights(stats, corpus, negative_mode="bogus")
