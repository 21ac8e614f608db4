"""Annotator agreement, aggregation, binarization, MITL round bookkeeping."""

from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from highlights import annotation
from highlights.annotation import (
    AnnotationMatrix,
    aggregate_scores,
    batch_schedule,
    binarize_labels,
    correction_effort,
    cronbach_alpha,
    next_batch,
    select_best_k,
)
from highlights.errors import (
    AllSubsetsDegenerate,
    EmptySubset,
    LengthMismatch,
    TooFewAnnotators,
    ZeroTotalVariance,
)


def _matrix(levels, ids=None):
    levels = np.asarray(levels)
    k, n = levels.shape
    ids = tuple(ids) if ids else tuple(f"a{i+1}" for i in range(k))
    return AnnotationMatrix(ids, tuple(range(n)), levels)


class TestAlpha:
    def test_perfect_agreement(self):
        # three identical annotators over a non-constant track
        m = np.array([[0, 1, 2, 3]] * 3)
        assert cronbach_alpha(m) == pytest.approx(1.0, abs=0)

    def test_zero_alpha(self):
        # sum variance equals the summed item variances exactly
        m = np.array([[0, 0, 1, 1], [0, 1, 0, 1]])
        assert cronbach_alpha(m) == pytest.approx(0.0, abs=0)

    def test_three_sevenths(self):
        m = np.array([[0, 1, 2, 3], [0, 1, 2, 3], [1, 2, 3, 0]])
        assert cronbach_alpha(m) == pytest.approx(3.0 / 7.0, abs=1e-15)

    def test_population_variance_is_used(self):
        # the 3/7 value only falls out of divide-by-n variances; it pins
        # the estimator choice down
        m = np.array([[0, 1, 2, 3], [0, 1, 2, 3], [1, 2, 3, 0]], dtype=np.float64)
        item = m.var(axis=1, ddof=0).sum()
        total = m.sum(axis=0).var(ddof=0)
        assert item == pytest.approx(3.75)
        assert total == pytest.approx(5.25)

    def test_constant_sums_raise(self):
        with pytest.raises(ZeroTotalVariance):
            cronbach_alpha(np.array([[0, 1], [1, 0]]))

    @given(
        st.integers(2, 5).flatmap(
            lambda k: st.lists(
                st.lists(st.integers(0, 3), min_size=6, max_size=6),
                min_size=k, max_size=k,
            )
        )
    )
    def test_alpha_never_exceeds_one(self, rows):
        m = np.array(rows)
        try:
            a = cronbach_alpha(m)
        except ZeroTotalVariance:
            return
        assert a <= 1.0 + 1e-12


class TestBestK:
    def test_only_candidate(self):
        m = _matrix([[0, 1, 2], [1, 0, 2], [2, 2, 2]])
        assert select_best_k(m, 3) == ("a1", "a2", "a3")

    def test_odd_one_out(self):
        m = _matrix([[0, 1, 2, 3]] * 3 + [[3, 2, 1, 0]], ids=["A1", "A2", "A3", "A4"])
        best = select_best_k(m, 3)
        assert best == ("A1", "A2", "A3")
        assert cronbach_alpha(m.rows_for(best)) == pytest.approx(1.0)

    def test_all_constant_raises(self):
        with pytest.raises(AllSubsetsDegenerate):
            select_best_k(_matrix(np.zeros((4, 5), dtype=int)), 3)

    def test_matches_exhaustive_oracle(self, rng):
        for _ in range(60):
            k = int(rng.integers(3, 8))
            n = int(rng.integers(4, 12))
            m = _matrix(rng.integers(0, 4, size=(k, n)))
            # independent brute force over all C(k,3) subsets
            expect, expect_alpha = None, -np.inf
            for subset in combinations(sorted(m.annotator_ids), 3):
                rows = m.rows_for(subset).astype(float)
                tot = rows.sum(axis=0).var()
                if tot == 0:
                    continue
                a = 1.5 * (1 - rows.var(axis=1).sum() / tot)
                if a > expect_alpha:
                    expect, expect_alpha = subset, a
            if expect is None:
                with pytest.raises(AllSubsetsDegenerate):
                    select_best_k(m, 3)
            else:
                assert select_best_k(m, 3) == expect


class TestAggregation:
    def test_mean_of_three(self):
        m = _matrix([[1, 0], [2, 0], [3, 3]])
        track = aggregate_scores(m, m.annotator_ids)
        assert track.scores[0] == pytest.approx(2.0)
        assert track.scores[1] == pytest.approx(1.0)

    def test_single_contributor_verbatim(self):
        m = _matrix([[0, 2, 3], [1, 1, 1]])
        track = aggregate_scores(m, ["a1"])
        np.testing.assert_array_equal(track.scores, [0, 2, 3])

    def test_empty_subset(self):
        with pytest.raises(EmptySubset):
            aggregate_scores(_matrix([[0, 1], [1, 0]]), [])


class TestBinarize:
    def test_boundary_inclusive(self):
        assert binarize_labels([1.0], tau=1.0).tolist() == [1]

    def test_below_threshold(self):
        assert binarize_labels([2.0 / 3.0], tau=1.0).tolist() == [0]

    def test_tau_zero_all_positive(self):
        assert binarize_labels([0.0, 0.5, 3.0], tau=0.0).tolist() == [1, 1, 1]


class TestEffort:
    def test_identity(self):
        assert correction_effort([1, 2, 3], [1, 2, 3]) == 0.0

    def test_complement(self):
        assert correction_effort([0, 0], [1, 1]) == 1.0

    def test_three_of_twelve(self):
        pre = [0] * 12
        cor = [1, 1, 1] + [0] * 9
        assert correction_effort(pre, cor) == pytest.approx(0.25)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            correction_effort([0], [0, 1])


class TestSchedule:
    def test_growth_then_remainder(self):
        assert batch_schedule(12, base=2) == [2, 4, 6]
        assert batch_schedule(13, base=2) == [2, 4, 7]

    def test_small_corpus(self):
        assert batch_schedule(3, base=2) == [2, 1]

    def test_sums_to_total(self):
        for n in range(1, 40):
            assert sum(batch_schedule(n, base=2)) == n


class TestRoundState:
    def test_next_batch_follows_schedule(self):
        ids = tuple(f"v{i}" for i in range(9))
        state = annotation.RoundState(video_order=ids)
        assert next_batch(state, base=2) == ["v0", "v1"]

    def test_state_round_trip(self):
        ids = tuple(f"v{i}" for i in range(5))
        state = annotation.RoundState(video_order=ids, labeled=["v0", "v1"],
                                      round_number=1, effort_history=[0.5])
        back = annotation.RoundState.from_dict(state.to_dict())
        assert back == state
