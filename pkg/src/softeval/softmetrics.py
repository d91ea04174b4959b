"""Soft and ordinary AUROC / AP over probabilistic labels.

Items are sorted by descending score; with ``p_i`` the probability that
item ``i`` is positive, the expected positive and negative counts among
the top ``i`` items are the prefix sums

    n_pos[i] = sum_{j<=i} p_j,        n_neg[i] = sum_{j<=i} (1 - p_j).

Soft AUROC is the right-Riemann sum ``sum_i TPR_i * (FPR_i - FPR_{i-1})`` and
soft AP is ``sum_i P_i * (R_i - R_{i-1})`` with ``TPR = R = n_pos / n_pos[n]``,
``FPR = n_neg / n_neg[n]`` and ``P_i = n_pos[i] / i``. For labels in {0, 1}
both reduce to the ordinary step-function AUROC and AP.

After sorting, both metrics are a single pass over the labels. The pass is
run in cache-sized blocks with compensated (two-sum) prefix sums so the
cost stays linear and accurate for millions of items.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .errors import DegenerateLabelsError, InvalidScoreError, SoftEvalError, Undefined

TieMode = Literal["stable", "block"]

# Fits comfortably in L2 with the handful of temporaries a block needs.
BLOCK_SIZE = 8192


@dataclass(frozen=True)
class LabeledScoreSet:
    """Items with a model score, a soft label and optionally a hard label."""

    item_ids: tuple[str, ...]
    scores: np.ndarray
    p: np.ndarray
    y: np.ndarray | None = None
    is_sorted: bool = False

    def __post_init__(self):
        ids = tuple(str(i) for i in self.item_ids)
        scores = np.asarray(self.scores, dtype=np.float64)
        p = np.asarray(self.p, dtype=np.float64)
        object.__setattr__(self, "item_ids", ids)
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "p", p)
        n = len(ids)
        if scores.shape != (n,) or p.shape != (n,):
            raise SoftEvalError("item_ids, scores and p must have equal length")
        if len(set(ids)) != n:
            raise SoftEvalError("item_ids must be unique")
        if not np.all(np.isfinite(scores)):
            bad = ids[int(np.flatnonzero(~np.isfinite(scores))[0])]
            raise InvalidScoreError(f"non-finite score for item {bad!r}")
        if not np.all((p >= 0.0) & (p <= 1.0)):
            bad = ids[int(np.flatnonzero(~((p >= 0.0) & (p <= 1.0)))[0])]
            raise SoftEvalError(f"soft label for item {bad!r} not in [0, 1]")
        if self.y is not None:
            y = np.asarray(self.y)
            if y.shape != (n,) or not np.all((y == 0) | (y == 1)):
                raise SoftEvalError("hard labels must be 0/1 and aligned with items")
            object.__setattr__(self, "y", y.astype(np.int8))

    @classmethod
    def from_arrays(cls, scores, p, y=None, item_ids=None) -> "LabeledScoreSet":
        """Convenience constructor; default ids are zero-padded positions."""
        n = len(scores)
        if item_ids is None:
            width = len(str(max(n - 1, 0)))
            item_ids = tuple(f"{i:0{width}d}" for i in range(n))
        return cls(tuple(item_ids), scores, p, y)

    def __len__(self) -> int:
        return len(self.item_ids)

    def with_hard_as_soft(self) -> "LabeledScoreSet":
        if self.y is None:
            raise SoftEvalError("no hard labels present")
        return LabeledScoreSet(
            self.item_ids, self.scores, self.y.astype(np.float64), None, self.is_sorted
        )


def canonical_order(scores: np.ndarray, item_ids: Sequence[str]) -> np.ndarray:
    """Permutation sorting by descending score, ties by ascending item id."""
    scores = np.asarray(scores, dtype=np.float64)
    if not np.all(np.isfinite(scores)):
        raise InvalidScoreError("scores must be finite")
    if len(scores) == 0:
        return np.zeros(0, dtype=np.intp)
    by_id = np.argsort(np.asarray(item_ids, dtype=str), kind="stable")
    return by_id[np.argsort(-scores[by_id], kind="stable")]


def canonical_sort(s: LabeledScoreSet) -> LabeledScoreSet:
    if s.is_sorted:
        return s
    order = canonical_order(s.scores, s.item_ids)
    return LabeledScoreSet(
        tuple(s.item_ids[i] for i in order),
        s.scores[order],
        s.p[order],
        None if s.y is None else s.y[order],
        is_sorted=True,
    )


# --- prefix sums -----------------------------------------------------------


def _compensated_prefix(x: np.ndarray, hi: float, lo: float):
    """Prefix sums of ``x`` continuing from the running total ``hi + lo``.

    Each sequential addition's rounding error is recovered exactly with
    two-sum and the errors are accumulated alongside. Returns the corrected
    prefix array and the new ``(hi, lo)`` carry.
    """
    y = np.empty(len(x) + 1)
    y[0] = hi
    y[1:] = x
    s = np.cumsum(y)
    prev = s[:-1]
    cur = s[1:]
    bb = cur - prev
    err = (prev - (cur - bb)) + (x - bb)
    e = np.cumsum(err)
    e += lo
    return cur + e, float(cur[-1]), float(e[-1])


def _iter_prefix_blocks(p: np.ndarray, block: int = BLOCK_SIZE):
    """Yield ``(start, p_block, n_pos_block, n_neg_block)`` over ``p``."""
    pos_carry = (0.0, 0.0)
    neg_carry = (0.0, 0.0)
    for start in range(0, len(p), block):
        chunk = p[start : start + block]
        n_pos, *pos_carry = _compensated_prefix(chunk, *pos_carry)
        n_neg, *neg_carry = _compensated_prefix(1.0 - chunk, *neg_carry)
        yield start, chunk, n_pos, n_neg


@dataclass(frozen=True)
class CumulativeCounts:
    n_pos: np.ndarray
    n_neg: np.ndarray
    total_pos: float
    total_neg: float


def cumulative_counts(sorted_p) -> CumulativeCounts:
    """Expected positive / negative counts among the top-i items."""
    p = np.asarray(sorted_p, dtype=np.float64)
    if len(p) == 0:
        return CumulativeCounts(np.zeros(0), np.zeros(0), 0.0, 0.0)
    pos, neg = [], []
    for _, _, n_pos, n_neg in _iter_prefix_blocks(p):
        pos.append(n_pos)
        neg.append(n_neg)
    n_pos = np.concatenate(pos)
    n_neg = np.concatenate(neg)
    return CumulativeCounts(n_pos, n_neg, float(n_pos[-1]), float(n_neg[-1]))


# --- kernels over sorted labels --------------------------------------------


def _check_totals(total_pos: float, total_neg: float, need_neg: bool) -> None:
    if not total_pos > 0.0:
        raise DegenerateLabelsError("positive", "no positive label mass (n_pos = 0)")
    if need_neg and not total_neg > 0.0:
        raise DegenerateLabelsError("negative", "no negative label mass (n_neg = 0)")


def _scan(p: np.ndarray):
    """One blocked pass returning totals and the unnormalized metric sums.

    ``auc_sum = sum_i n_pos[i] * (1 - p_i)`` and ``ap_sum = sum_i n_pos[i] / i * p_i``.
    """
    auc_parts = []
    ap_parts = []
    total_pos = total_neg = 0.0
    for start, chunk, n_pos, n_neg in _iter_prefix_blocks(p):
        rank = np.arange(start + 1, start + len(chunk) + 1, dtype=np.float64)
        auc_parts.append(float(np.dot(n_pos, 1.0 - chunk)))
        ap_parts.append(float(np.dot(n_pos / rank, chunk)))
        total_pos = float(n_pos[-1])
        total_neg = float(n_neg[-1])
    return total_pos, total_neg, math.fsum(auc_parts), math.fsum(ap_parts)


def sorted_metrics(sorted_p) -> tuple[float | Undefined, float | Undefined]:
    """``(s_auroc, s_ap)`` for labels already in canonical score order.

    Degenerate totals yield ``Undefined`` markers instead of raising.
    """
    p = np.asarray(sorted_p, dtype=np.float64)
    total_pos, total_neg, auc_sum, ap_sum = _scan(p)
    if not total_pos > 0.0:
        undef = Undefined("no positive label mass")
        return undef, undef
    ap = min(ap_sum / total_pos, 1.0)
    if not total_neg > 0.0:
        return Undefined("no negative label mass"), ap
    return min(auc_sum / (total_pos * total_neg), 1.0), ap


def soft_auroc_sorted(sorted_p) -> float:
    p = np.asarray(sorted_p, dtype=np.float64)
    total_pos, total_neg, auc_sum, _ = _scan(p)
    _check_totals(total_pos, total_neg, need_neg=True)
    return min(auc_sum / (total_pos * total_neg), 1.0)


def soft_ap_sorted(sorted_p) -> float:
    p = np.asarray(sorted_p, dtype=np.float64)
    total_pos, _, _, ap_sum = _scan(p)
    _check_totals(total_pos, 0.0, need_neg=False)
    return min(ap_sum / total_pos, 1.0)


def _block_ends(sorted_scores: np.ndarray) -> np.ndarray:
    """Index of the last item in each run of equal scores."""
    n = len(sorted_scores)
    if n == 0:
        return np.zeros(0, dtype=np.intp)
    change = np.flatnonzero(sorted_scores[1:] != sorted_scores[:-1])
    return np.append(change, n - 1)


def _block_rates(s: LabeledScoreSet, need_neg: bool):
    counts = cumulative_counts(s.p)
    _check_totals(counts.total_pos, counts.total_neg, need_neg)
    ends = _block_ends(s.scores)
    return counts, ends


def soft_auroc(s: LabeledScoreSet, tie_mode: TieMode = "stable") -> float:
    """Soft AUROC.

    ``tie_mode="stable"`` steps through tied scores one item at a time in
    canonical order; ``"block"`` collapses each run of tied scores into a
    single step and interpolates linearly across it.
    """
    s = canonical_sort(s)
    if tie_mode == "stable":
        return soft_auroc_sorted(s.p)
    if tie_mode != "block":
        raise SoftEvalError(f"unknown tie mode {tie_mode!r}")
    counts, ends = _block_rates(s, need_neg=True)
    tpr = np.concatenate(([0.0], counts.n_pos[ends] / counts.total_pos))
    fpr = np.concatenate(([0.0], counts.n_neg[ends] / counts.total_neg))
    return min(float(np.sum((tpr[1:] + tpr[:-1]) * np.diff(fpr)) / 2.0), 1.0)


def soft_ap(s: LabeledScoreSet, tie_mode: TieMode = "stable") -> float:
    s = canonical_sort(s)
    if tie_mode == "stable":
        return soft_ap_sorted(s.p)
    if tie_mode != "block":
        raise SoftEvalError(f"unknown tie mode {tie_mode!r}")
    counts, ends = _block_rates(s, need_neg=False)
    precision = counts.n_pos[ends] / (ends + 1.0)
    recall = np.concatenate(([0.0], counts.n_pos[ends] / counts.total_pos))
    return min(float(np.dot(precision, np.diff(recall))), 1.0)


# --- quadratic oracles -------------------------------------------------------


def _oracle_totals(s: LabeledScoreSet, need_neg: bool):
    s = canonical_sort(s)
    p = [float(v) for v in s.p]
    total_pos = math.fsum(p)
    total_neg = math.fsum(1.0 - v for v in p)
    _check_totals(total_pos, total_neg, need_neg)
    return p, total_pos, total_neg


def soft_auroc_pairwise_oracle(s: LabeledScoreSet, j_upper: str = "i") -> float:
    """Soft AUROC as an explicit double sum over ranked pairs.

    ``sum_i sum_{j<=i} (1 - p_i) p_j / (n_pos * n_neg)``. With
    ``j_upper="i-1"`` the diagonal ``j == i`` is dropped, which differs from
    the step-curve area by ``sum_i (1 - p_i) p_i / (n_pos * n_neg)``; both
    agree when labels are binary.
    """
    if j_upper not in ("i", "i-1"):
        raise SoftEvalError("j_upper must be 'i' or 'i-1'")
    p, total_pos, total_neg = _oracle_totals(s, need_neg=True)
    extra = 1 if j_upper == "i" else 0
    terms = [
        (1.0 - p[i]) * p[j] for i in range(len(p)) for j in range(i + extra)
    ]
    return math.fsum(terms) / (total_pos * total_neg)


def soft_ap_pairwise_oracle(s: LabeledScoreSet) -> float:
    """``sum_i sum_{j<=i} (p_i / i) * (p_j / n_pos)`` with 1-based ``i``."""
    p, total_pos, _ = _oracle_totals(s, need_neg=False)
    terms = [
        (p[i] / (i + 1)) * (p[j] / total_pos)
        for i in range(len(p))
        for j in range(i + 1)
    ]
    return math.fsum(terms)


# --- curves ------------------------------------------------------------------


@dataclass(frozen=True)
class RocPoint:
    rank: int
    fpr: float
    tpr: float


@dataclass(frozen=True)
class PrPoint:
    rank: int
    recall: float
    precision: float | None  # undefined at rank 0


def _curve_ranks(s: LabeledScoreSet, tie_mode: TieMode) -> np.ndarray:
    if tie_mode == "stable":
        return np.arange(len(s))
    if tie_mode == "block":
        return _block_ends(s.scores)
    raise SoftEvalError(f"unknown tie mode {tie_mode!r}")


def roc_curve(s: LabeledScoreSet, tie_mode: TieMode = "stable") -> list[RocPoint]:
    s = canonical_sort(s)
    counts = cumulative_counts(s.p)
    _check_totals(counts.total_pos, counts.total_neg, need_neg=True)
    idx = _curve_ranks(s, tie_mode)
    fpr = counts.n_neg[idx] / counts.total_neg
    tpr = counts.n_pos[idx] / counts.total_pos
    points = [RocPoint(0, 0.0, 0.0)]
    points += [
        RocPoint(int(i) + 1, min(float(f), 1.0), min(float(t), 1.0))
        for i, f, t in zip(idx, fpr, tpr)
    ]
    return points


def pr_curve(s: LabeledScoreSet, tie_mode: TieMode = "stable") -> list[PrPoint]:
    s = canonical_sort(s)
    counts = cumulative_counts(s.p)
    _check_totals(counts.total_pos, counts.total_neg, need_neg=False)
    idx = _curve_ranks(s, tie_mode)
    recall = counts.n_pos[idx] / counts.total_pos
    precision = counts.n_pos[idx] / (idx + 1.0)
    points = [PrPoint(0, 0.0, None)]
    points += [
        PrPoint(int(i) + 1, min(float(r), 1.0), min(float(pr), 1.0))
        for i, r, pr in zip(idx, recall, precision)
    ]
    return points


def roc_area(points: Sequence[RocPoint]) -> float:
    """Right-Riemann area under exported ROC steps."""
    return math.fsum(
        b.tpr * (b.fpr - a.fpr) for a, b in zip(points[:-1], points[1:])
    )


# --- four-metric summary -----------------------------------------------------

METRIC_NAMES = ("auroc", "ap", "s_auroc", "s_ap")
METRIC_PAIRS = (("auroc", "s_auroc"), ("ap", "s_ap"))
DISPLAY_NAMES = {"auroc": "AUROC", "ap": "AP", "s_auroc": "s-AUROC", "s_ap": "s-AP"}


@dataclass(frozen=True)
class MetricQuad:
    auroc: float | Undefined
    ap: float | Undefined
    s_auroc: float | Undefined
    s_ap: float | Undefined

    def get(self, name: str) -> float | Undefined:
        if name not in METRIC_NAMES:
            raise KeyError(name)
        return getattr(self, name)

    def as_dict(self) -> dict:
        return {name: self.get(name) for name in METRIC_NAMES}


def _guarded(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except DegenerateLabelsError as exc:
        return Undefined(str(exc))


def metric_quad(s: LabeledScoreSet, tie_mode: TieMode = "stable") -> MetricQuad:
    """Ordinary metrics on hard labels and soft metrics on soft labels.

    Ordinary metrics go through the soft kernels with the hard labels as
    0/1 probabilities. A degenerate cell becomes ``Undefined`` without
    affecting the others.
    """
    s = canonical_sort(s)
    if s.y is None:
        auroc = ap = Undefined("no hard labels")
    else:
        hard = s.with_hard_as_soft()
        auroc = _guarded(soft_auroc, hard, tie_mode)
        ap = _guarded(soft_ap, hard, tie_mode)
    return MetricQuad(
        auroc=auroc,
        ap=ap,
        s_auroc=_guarded(soft_auroc, s, tie_mode),
        s_ap=_guarded(soft_ap, s, tie_mode),
    )
