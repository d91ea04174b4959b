"""Raw multi-annotator ratings and their aggregation into soft and hard labels.

Ratings live on a user-declared scale. Soft labels are the mean of the
ratings after mapping the scale onto [0, 1]; hard labels come either from
thresholding that mean or from a majority vote over binary ratings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Literal, Sequence

import numpy as np

from .errors import (
    EmptyAnnotationsError,
    InvalidVoteError,
    OutOfRangeError,
    SoftEvalError,
    TieError,
)

TiePolicy = Literal["negative", "positive", "error"]
TIE_POLICIES = ("negative", "positive", "error")


@dataclass(frozen=True)
class RatingScale:
    min_value: float
    max_value: float

    def __post_init__(self):
        if not (math.isfinite(self.min_value) and math.isfinite(self.max_value)):
            raise SoftEvalError("scale bounds must be finite")
        if not self.max_value > self.min_value:
            raise SoftEvalError(
                f"scale max ({self.max_value}) must exceed min ({self.min_value})"
            )

    @property
    def width(self) -> float:
        return self.max_value - self.min_value


BINARY_SCALE = RatingScale(0.0, 1.0)


def _check_rating(r: float, scale: RatingScale, item_id=None) -> None:
    if not (math.isfinite(r) and scale.min_value <= r <= scale.max_value):
        who = f" for item {item_id!r}" if item_id is not None else ""
        raise OutOfRangeError(
            f"rating {r!r}{who} outside scale [{scale.min_value}, {scale.max_value}]"
        )


def normalize_rating(r: float, scale: RatingScale, item_id=None) -> float:
    """Map ``r`` affinely from ``scale`` onto [0, 1]."""
    _check_rating(r, scale, item_id)
    return (r - scale.min_value) / scale.width


def aggregate_mean(ratings: Sequence[float]) -> float:
    """Soft label as the arithmetic mean of normalized ratings."""
    if len(ratings) == 0:
        raise EmptyAnnotationsError("cannot aggregate an empty rating list")
    for r in ratings:
        if not (0.0 <= r <= 1.0):
            raise OutOfRangeError(f"normalized rating {r!r} not in [0, 1]")
    # fsum keeps the mean independent of rating order
    return min(1.0, math.fsum(ratings) / len(ratings))


def binarize_threshold(p: float, threshold: float = 0.5, inclusive: bool = False) -> int:
    if not (0.0 <= threshold <= 1.0):
        raise OutOfRangeError(f"threshold {threshold!r} not in [0, 1]")
    if not (0.0 <= p <= 1.0):
        raise OutOfRangeError(f"soft label {p!r} not in [0, 1]")
    return int(p >= threshold) if inclusive else int(p > threshold)


def majority_vote(votes: Sequence[int], tie_policy: TiePolicy = "negative") -> int:
    """Hard label by simple majority over binary votes.

    An exact split resolves per ``tie_policy``; ``"error"`` raises TieError.
    """
    if len(votes) == 0:
        raise EmptyAnnotationsError("cannot vote on an empty rating list")
    pos = 0
    for v in votes:
        if v not in (0, 1):
            raise InvalidVoteError(f"vote {v!r} is not binary")
        pos += int(v)
    neg = len(votes) - pos
    if pos != neg:
        return int(pos > neg)
    return _resolve_tie(tie_policy)


def _resolve_tie(tie_policy: str, item_id=None) -> int:
    if tie_policy == "negative":
        return 0
    if tie_policy == "positive":
        return 1
    if tie_policy == "error":
        who = f" for item {item_id!r}" if item_id is not None else ""
        raise TieError(f"split majority vote{who}")
    raise SoftEvalError(f"unknown tie policy {tie_policy!r}")


@dataclass(frozen=True)
class ItemRatings:
    item_id: str
    ratings: tuple[float, ...]
    annotator_ids: tuple[str | None, ...] | None = None


@dataclass(frozen=True)
class AnnotationTable:
    """Per-item rating multisets on a declared scale.

    Item order is preserved as given; ``flat`` exposes the normalized
    ratings as one contiguous array with per-item offsets.
    """

    items: tuple[ItemRatings, ...]
    scale: RatingScale

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        seen = set()
        for item in self.items:
            if item.item_id in seen:
                raise SoftEvalError(f"duplicate item_id {item.item_id!r}")
            seen.add(item.item_id)
            if len(item.ratings) == 0:
                raise EmptyAnnotationsError(f"item {item.item_id!r} has no ratings")
            if item.annotator_ids is not None and len(item.annotator_ids) != len(
                item.ratings
            ):
                raise SoftEvalError(
                    f"item {item.item_id!r}: annotator_ids not aligned with ratings"
                )
            for r in item.ratings:
                _check_rating(r, self.scale, item.item_id)

    @classmethod
    def from_mapping(cls, ratings: dict, scale: RatingScale) -> "AnnotationTable":
        """Build from ``{item_id: [ratings...]}``."""
        return cls(
            tuple(
                ItemRatings(str(k), tuple(float(r) for r in v))
                for k, v in ratings.items()
            ),
            scale,
        )

    @property
    def item_ids(self) -> tuple[str, ...]:
        return tuple(item.item_id for item in self.items)

    def __len__(self) -> int:
        return len(self.items)

    @cached_property
    def flat(self) -> "FlatRatings":
        counts = np.array([len(it.ratings) for it in self.items], dtype=np.int64)
        offsets = np.zeros(len(counts), dtype=np.int64)
        if len(counts):
            offsets[1:] = np.cumsum(counts)[:-1]
        raw = np.array(
            [r for it in self.items for r in it.ratings], dtype=np.float64
        )
        values = (raw - self.scale.min_value) / self.scale.width
        return FlatRatings(values, offsets, counts)


@dataclass(frozen=True)
class FlatRatings:
    values: np.ndarray  # normalized ratings, item-major
    offsets: np.ndarray
    counts: np.ndarray


@dataclass(frozen=True)
class ThresholdRule:
    """Hard label from the soft label: ``p > threshold`` (or ``>=``)."""

    threshold: float = 0.5
    inclusive: bool = False

    def __post_init__(self):
        if not (0.0 <= self.threshold <= 1.0):
            raise OutOfRangeError(f"threshold {self.threshold!r} not in [0, 1]")

    def hard_labels(self, soft, positives, counts, item_ids=None):
        soft = np.asarray(soft)
        y = soft >= self.threshold if self.inclusive else soft > self.threshold
        ties = int(np.count_nonzero(soft == self.threshold))
        return y.astype(np.int8), ties

    def describe(self) -> dict:
        return {
            "binarize": "threshold",
            "threshold": self.threshold,
            "inclusive": self.inclusive,
        }


@dataclass(frozen=True)
class MajorityRule:
    """Hard label by majority over binary (0/1 after normalization) votes."""

    tie_policy: TiePolicy = "negative"

    def __post_init__(self):
        if self.tie_policy not in TIE_POLICIES:
            raise SoftEvalError(f"unknown tie policy {self.tie_policy!r}")

    def hard_labels(self, soft, positives, counts, item_ids=None):
        twice = 2 * positives
        y = twice > counts
        tie = twice == counts
        n_ties = int(np.count_nonzero(tie))
        if n_ties:
            if self.tie_policy == "error":
                first = int(np.flatnonzero(tie)[0])
                who = item_ids[first] if item_ids is not None else first
                _resolve_tie("error", who)
            y = y | (tie & (self.tie_policy == "positive"))
        return y.astype(np.int8), n_ties

    def describe(self) -> dict:
        return {"binarize": "majority", "tie_policy": self.tie_policy}


@dataclass(frozen=True)
class AggregatedLabels:
    item_ids: tuple[str, ...]
    p: np.ndarray
    y: np.ndarray
    n_ties: int = 0

    def __len__(self) -> int:
        return len(self.item_ids)


@dataclass(frozen=True)
class LabelPipeline:
    """Normalization scale plus binarization rule, applied item-wise."""

    scale: RatingScale
    rule: ThresholdRule | MajorityRule = field(default_factory=ThresholdRule)

    def labels_from_flat(self, values, offsets, counts, item_ids=None):
        """Soft and hard labels from normalized, item-major ratings.

        Returns ``(p, y, n_ties)``.
        """
        if len(counts) == 0:
            empty = np.zeros(0)
            return empty, empty.astype(np.int8), 0
        sums = np.add.reduceat(values, offsets)
        p = np.minimum(sums / counts, 1.0)
        positives = None
        if isinstance(self.rule, MajorityRule):
            binary = (values == 0.0) | (values == 1.0)
            if not binary.all():
                bad = int(np.flatnonzero(~binary)[0])
                item = int(np.searchsorted(offsets, bad, side="right") - 1)
                who = item_ids[item] if item_ids is not None else item
                raise InvalidVoteError(
                    f"item {who!r}: majority vote needs binary ratings at the "
                    f"scale bounds, got normalized value {values[bad]!r}"
                )
            positives = np.add.reduceat((values == 1.0).astype(np.int64), offsets)
        y, ties = self.rule.hard_labels(p, positives, counts, item_ids)
        return p, y, ties

    def aggregate(self, table: AnnotationTable) -> AggregatedLabels:
        if table.scale != self.scale:
            raise SoftEvalError("annotation table scale differs from pipeline scale")
        flat = table.flat
        p, y, ties = self.labels_from_flat(
            flat.values, flat.offsets, flat.counts, table.item_ids
        )
        return AggregatedLabels(table.item_ids, p, y, ties)

    def describe(self) -> dict:
        out = {"scale_min": self.scale.min_value, "scale_max": self.scale.max_value}
        out.update(self.rule.describe())
        return out


def aggregate_table(
    table: AnnotationTable, rule: ThresholdRule | MajorityRule | None = None
) -> AggregatedLabels:
    return LabelPipeline(table.scale, rule or ThresholdRule()).aggregate(table)


def group_long_rows(rows: Iterable[tuple[str, str | None, float]]):
    """Merge long-format ``(item_id, annotator_id, rating)`` rows per item.

    First-seen item order is kept; repeated item rows extend that item's
    rating multiset.
    """
    grouped: dict[str, tuple[list, list]] = {}
    for item_id, annotator_id, rating in rows:
        ratings, annotators = grouped.setdefault(item_id, ([], []))
        ratings.append(rating)
        annotators.append(annotator_id)
    return [
        ItemRatings(k, tuple(r), tuple(a)) for k, (r, a) in grouped.items()
    ]
