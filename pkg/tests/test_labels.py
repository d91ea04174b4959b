import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from softeval.errors import (
    EmptyAnnotationsError,
    InvalidVoteError,
    OutOfRangeError,
    SoftEvalError,
    TieError,
)
from softeval.labels import (
    BINARY_SCALE,
    AnnotationTable,
    ItemRatings,
    LabelPipeline,
    MajorityRule,
    RatingScale,
    ThresholdRule,
    aggregate_mean,
    aggregate_table,
    binarize_threshold,
    group_long_rows,
    majority_vote,
    normalize_rating,
)

SCALE02 = RatingScale(0, 2)


class TestRatingScale:
    def test_rejects_empty_range(self):
        with pytest.raises(SoftEvalError):
            RatingScale(1, 1)
        with pytest.raises(SoftEvalError):
            RatingScale(2, 0)


class TestNormalize:
    @pytest.mark.parametrize("r, expected", [(0, 0.0), (2, 1.0), (1, 0.5)])
    def test_examples(self, r, expected):
        assert normalize_rating(r, SCALE02) == expected

    def test_out_of_range_names_item(self):
        with pytest.raises(OutOfRangeError, match="lesion-7"):
            normalize_rating(3, SCALE02, item_id="lesion-7")

    def test_nan_rejected(self):
        with pytest.raises(OutOfRangeError):
            normalize_rating(float("nan"), SCALE02)

    @given(
        st.floats(0, 5, allow_nan=False),
        st.floats(0, 5, allow_nan=False),
    )
    def test_order_preserving(self, a, b):
        scale = RatingScale(0, 5)
        if a < b:
            assert normalize_rating(a, scale) < normalize_rating(b, scale)


class TestAggregateMean:
    def test_examples(self):
        assert aggregate_mean([1.0]) == 1.0
        assert aggregate_mean([0.0, 0.5, 1.0]) == 0.5
        assert aggregate_mean([1, 1, 1, 1, 1, 1, 0, 0, 0, 0]) == 0.6

    def test_empty(self):
        with pytest.raises(EmptyAnnotationsError):
            aggregate_mean([])

    def test_unnormalized_rejected(self):
        with pytest.raises(OutOfRangeError):
            aggregate_mean([0.5, 2.0])

    @given(st.lists(st.floats(0, 1), min_size=1, max_size=20), st.randoms())
    def test_permutation_invariant(self, ratings, rnd):
        shuffled = list(ratings)
        rnd.shuffle(shuffled)
        assert aggregate_mean(shuffled) == aggregate_mean(ratings)


class TestBinarize:
    def test_strict_boundary(self):
        # mean exactly 1 on a [0, 2] scale is not "> 1"
        assert binarize_threshold(0.5, 0.5, inclusive=False) == 0

    def test_inclusive_boundary(self):
        assert binarize_threshold(0.5, 0.5, inclusive=True) == 1

    def test_above(self):
        assert binarize_threshold(0.51, 0.5) == 1

    def test_threshold_range(self):
        with pytest.raises(OutOfRangeError):
            binarize_threshold(0.5, 1.5)

    @given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.booleans())
    def test_monotone(self, a, b, t, inclusive):
        lo, hi = sorted((a, b))
        assert binarize_threshold(lo, t, inclusive) <= binarize_threshold(hi, t, inclusive)


class TestMajorityVote:
    def test_examples(self):
        assert majority_vote([1, 1, 0]) == 1
        assert majority_vote([1, 0]) == 0
        assert majority_vote([0, 0, 0]) == 0

    def test_tie_policies(self):
        assert majority_vote([1, 0], "positive") == 1
        with pytest.raises(TieError):
            majority_vote([0, 1], "error")

    def test_errors(self):
        with pytest.raises(EmptyAnnotationsError):
            majority_vote([])
        with pytest.raises(InvalidVoteError):
            majority_vote([1, 2])

    @given(st.lists(st.integers(0, 1), min_size=1, max_size=15))
    def test_agrees_with_threshold_without_tie(self, votes):
        if 2 * sum(votes) == len(votes):
            return
        p = aggregate_mean(votes)
        assert binarize_threshold(p, 0.5) == majority_vote(votes)


class TestAnnotationTable:
    def test_invariants(self):
        with pytest.raises(SoftEvalError, match="duplicate"):
            AnnotationTable((ItemRatings("a", (1.0,)), ItemRatings("a", (0.0,))), SCALE02)
        with pytest.raises(EmptyAnnotationsError):
            AnnotationTable((ItemRatings("a", ()),), SCALE02)
        with pytest.raises(OutOfRangeError, match="'b'"):
            AnnotationTable((ItemRatings("a", (1.0,)), ItemRatings("b", (2.5,))), SCALE02)

    def test_long_rows_merge(self):
        rows = [("x", "r1", 1.0), ("y", "r1", 0.0), ("x", "r2", 2.0)]
        items = group_long_rows(rows)
        assert [it.item_id for it in items] == ["x", "y"]
        assert items[0].ratings == (1.0, 2.0)
        assert items[0].annotator_ids == ("r1", "r2")

    def test_enhance_style_pipeline(self):
        table = AnnotationTable.from_mapping(
            {"a": [0, 1, 2], "b": [2, 2, 1], "c": [1, 1]}, SCALE02
        )
        labels = aggregate_table(table, ThresholdRule(0.5))
        np.testing.assert_allclose(labels.p, [0.5, 5 / 6, 0.5])
        assert labels.y.tolist() == [0, 1, 0]
        assert labels.n_ties == 2

    def test_majority_pipeline(self):
        table = AnnotationTable.from_mapping(
            {"a": [1, 1, 0], "b": [0, 1], "c": [0, 0, 0]}, BINARY_SCALE
        )
        labels = aggregate_table(table, MajorityRule())
        np.testing.assert_allclose(labels.p, [2 / 3, 0.5, 0.0])
        assert labels.y.tolist() == [1, 0, 0]
        assert labels.n_ties == 1
        pos = aggregate_table(table, MajorityRule("positive"))
        assert pos.y.tolist() == [1, 1, 0]
        with pytest.raises(TieError, match="'b'"):
            aggregate_table(table, MajorityRule("error"))

    def test_majority_needs_binary_ratings(self):
        table = AnnotationTable.from_mapping({"a": [0, 1, 2]}, SCALE02)
        with pytest.raises(InvalidVoteError, match="'a'"):
            aggregate_table(table, MajorityRule())

    def test_pipeline_matches_scalar_ops(self):
        rng = np.random.default_rng(3)
        mapping = {
            f"i{k}": list(rng.integers(0, 5, size=rng.integers(1, 6)).astype(float))
            for k in range(50)
        }
        scale = RatingScale(0, 4)
        labels = LabelPipeline(scale).aggregate(AnnotationTable.from_mapping(mapping, scale))
        for k, (item, ratings) in enumerate(mapping.items()):
            expected = aggregate_mean([normalize_rating(r, scale) for r in ratings])
            assert math.isclose(labels.p[k], expected, abs_tol=1e-15)
            assert labels.y[k] == binarize_threshold(labels.p[k], 0.5)
