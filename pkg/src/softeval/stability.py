"""Ranking stability under annotation resampling.

Each bootstrap iteration resamples every item's ratings with replacement
(same count as observed), re-aggregates labels, recomputes the four
metrics for every model, re-ranks the models, and correlates that ranking
with the ranking on the original labels. Iteration ``b`` draws from its own
Philox substream keyed by ``(seed, b)``, so results do not depend on how
iterations are spread across worker processes.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .errors import EmptyAnnotationsError, SoftEvalError, Undefined, is_defined
from .labels import AnnotationTable, LabelPipeline, ThresholdRule
from .softmetrics import (
    DISPLAY_NAMES,
    METRIC_NAMES,
    METRIC_PAIRS,
    LabeledScoreSet,
    TieMode,
    canonical_order,
    metric_quad,
    sorted_metrics,
)

STATISTICS = ("kendall", "spearman")
DEFAULT_STATISTIC = "kendall"
MAX_SEED = 2**64 - 1


# --- random streams ------------------------------------------------------------


def iteration_rng(seed: int, index: int) -> np.random.Generator:
    """Counter-based generator for bootstrap iteration ``index``."""
    if not 0 <= seed <= MAX_SEED:
        raise SoftEvalError(f"seed must be an unsigned 64-bit integer, got {seed}")
    ss = np.random.SeedSequence(seed, spawn_key=(index,))
    return np.random.Generator(np.random.Philox(ss))


def bootstrap_resample_item(ratings: Sequence, rng: np.random.Generator) -> list:
    """Draw ``len(ratings)`` ratings uniformly with replacement."""
    k = len(ratings)
    if k == 0:
        raise EmptyAnnotationsError("cannot resample an empty rating list")
    return [ratings[i] for i in rng.integers(0, k, size=k)]


def resample_flat(values: np.ndarray, offsets: np.ndarray, counts: np.ndarray, rng):
    """Resample every item's ratings at once; item layout is unchanged."""
    starts = np.repeat(offsets, counts)
    highs = np.repeat(counts, counts)
    return values[starts + rng.integers(0, highs)]


# --- rankings and correlations -------------------------------------------------


@dataclass(frozen=True)
class ModelRanking:
    """Average ranks, 1 = best (highest metric value)."""

    metric_name: str
    ranks: Mapping[str, float]

    def aligned(self, models: Sequence[str]) -> np.ndarray:
        return np.array([self.ranks[m] for m in models], dtype=np.float64)


def average_ranks(values: Sequence[float]) -> np.ndarray:
    """Ranks with 1 for the largest value; tied values share their mean rank."""
    v = np.asarray(values, dtype=np.float64)
    order = np.argsort(-v, kind="stable")
    ranks = np.empty(len(v))
    i = 0
    while i < len(v):
        j = i
        while j + 1 < len(v) and v[order[j + 1]] == v[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def rank_models(values: Mapping[str, float], metric_name: str = "") -> ModelRanking:
    models = list(values)
    ranks = average_ranks([values[m] for m in models])
    return ModelRanking(metric_name, {m: float(r) for m, r in zip(models, ranks)})


def _paired(a, b) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(a, ModelRanking) or isinstance(b, ModelRanking):
        if not (isinstance(a, ModelRanking) and isinstance(b, ModelRanking)):
            raise SoftEvalError("compare a ModelRanking with a ModelRanking")
        if set(a.ranks) != set(b.ranks):
            raise SoftEvalError("rankings cover different model sets")
        models = sorted(a.ranks)
        return a.aligned(models), b.aligned(models)
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise SoftEvalError("rank vectors must be 1-d and of equal length")
    return x, y


def _pearson(x: np.ndarray, y: np.ndarray) -> float | Undefined:
    if len(x) < 2:
        return Undefined("fewer than 2 points")
    mx = math.fsum(x) / len(x)
    my = math.fsum(y) / len(y)
    dx = x - mx
    dy = y - my
    sxx = math.fsum(dx * dx)
    syy = math.fsum(dy * dy)
    if sxx == 0.0 or syy == 0.0:
        return Undefined("zero variance")
    r = math.fsum(dx * dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def spearman_rho(ranks_a, ranks_b) -> float | Undefined:
    """Spearman's rho as the Pearson correlation of (average) ranks."""
    x, y = _paired(ranks_a, ranks_b)
    return _pearson(x, y)


def kendall_tau(ranks_a, ranks_b) -> float | Undefined:
    """Kendall's tau-b, corrected for ties on either side."""
    x, y = _paired(ranks_a, ranks_b)
    m = len(x)
    if m < 2:
        return Undefined("fewer than 2 models")
    concordant = discordant = tied_x = tied_y = 0
    for i in range(m):
        for j in range(i + 1, m):
            sx = np.sign(x[i] - x[j])
            sy = np.sign(y[i] - y[j])
            if sx == 0:
                tied_x += 1
            if sy == 0:
                tied_y += 1
            if sx * sy > 0:
                concordant += 1
            elif sx * sy < 0:
                discordant += 1
    n0 = m * (m - 1) // 2
    denom = (n0 - tied_x) * (n0 - tied_y)
    if denom == 0:
        return Undefined("zero variance")
    tau = (concordant - discordant) / math.sqrt(denom)
    return max(-1.0, min(1.0, tau))


def sign_test(wins_a: int, wins_b: int) -> float | Undefined:
    """One-sided exact binomial p-value that ``a`` beats ``b`` more often.

    ``P[X >= wins_a]`` for ``X ~ Binomial(wins_a + wins_b, 1/2)``; ties must
    be removed beforehand.
    """
    if wins_a < 0 or wins_b < 0:
        raise SoftEvalError("win counts must be non-negative")
    n = wins_a + wins_b
    if n == 0:
        return Undefined("no informative trials")
    tail = sum(math.comb(n, k) for k in range(wins_a, n + 1))
    return float(Fraction(tail, 2**n))


def pearson_r2(xs: Sequence[float], ys: Sequence[float]) -> float | Undefined:
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape:
        raise SoftEvalError("xs and ys must have equal length")
    r = _pearson(x, y)
    if not is_defined(r):
        return r
    return min(1.0, r * r)


# --- bootstrap -----------------------------------------------------------------


@dataclass(frozen=True)
class BootstrapConfig:
    iterations: int = 1000
    seed: int = 0
    pipeline: LabelPipeline | None = None
    tie_mode: TieMode = "stable"

    def __post_init__(self):
        if self.iterations < 1:
            raise SoftEvalError("iterations must be >= 1")
        if not 0 <= self.seed <= MAX_SEED:
            raise SoftEvalError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class MetricStability:
    metric: str
    mean_spearman: float | Undefined
    mean_kendall: float | Undefined
    skipped_iterations: int
    undefined_spearman: int = 0
    undefined_kendall: int = 0


@dataclass(frozen=True)
class PairComparison:
    """Per-iteration stability contest between an ordinary and a soft metric.

    ``wins`` counts iterations where the soft metric's rank correlation is
    strictly higher, ``losses`` where the ordinary one is; everything else,
    including iterations where either correlation is undefined, is a tie.
    """

    ordinary: str
    soft: str
    statistic: str
    wins: int
    losses: int
    ties: int
    p_value: float | Undefined


@dataclass(frozen=True)
class StabilityReport:
    seed: int
    iterations: int
    models: tuple[str, ...]
    metrics: Mapping[str, MetricStability]
    pairs: tuple[PairComparison, ...]
    original_rankings: Mapping[str, ModelRanking | Undefined]
    default_statistic: str = DEFAULT_STATISTIC
    config: Mapping = field(default_factory=dict)

    def pair(self, ordinary: str, soft: str, statistic: str = DEFAULT_STATISTIC):
        for pc in self.pairs:
            if (pc.ordinary, pc.soft, pc.statistic) == (ordinary, soft, statistic):
                return pc
        raise KeyError((ordinary, soft, statistic))

    def to_dict(self) -> dict:
        def val(v):
            return None if isinstance(v, Undefined) else v

        metrics = {}
        for name, ms in self.metrics.items():
            metrics[name] = {
                "display_name": DISPLAY_NAMES[name],
                "mean_spearman": val(ms.mean_spearman),
                "mean_kendall": val(ms.mean_kendall),
                "skipped_iterations": ms.skipped_iterations,
                "undefined_spearman": ms.undefined_spearman,
                "undefined_kendall": ms.undefined_kendall,
            }
        pairs = {}
        for pc in self.pairs:
            key = f"{pc.ordinary}_vs_{pc.soft}"
            pairs.setdefault(key, {})[pc.statistic] = {
                "wins": pc.wins,
                "losses": pc.losses,
                "ties": pc.ties,
                "p_value": val(pc.p_value),
            }
        rankings = {}
        for name, rk in self.original_rankings.items():
            rankings[name] = None if isinstance(rk, Undefined) else dict(rk.ranks)
        return {
            "seed": self.seed,
            "iterations": self.iterations,
            "models": list(self.models),
            "default_statistic": self.default_statistic,
            "metrics": metrics,
            "pairs": pairs,
            "original_rankings": rankings,
            "config": dict(self.config),
        }


@dataclass(frozen=True)
class _BootstrapState:
    """Everything a worker needs; picklable."""

    values: np.ndarray
    offsets: np.ndarray
    counts: np.ndarray
    item_ids: tuple[str, ...]
    orders: tuple[np.ndarray, ...]
    sorted_scores: tuple[np.ndarray, ...]
    pipeline: LabelPipeline
    seed: int
    tie_mode: str
    original: tuple  # per metric: rank vector or None


def _model_metrics(state: _BootstrapState, p: np.ndarray, y: np.ndarray):
    """Metric values, shape (n_models, 4); NaN marks an undefined cell."""
    out = np.full((len(state.orders), len(METRIC_NAMES)), np.nan)
    yf = y.astype(np.float64)
    for k, order in enumerate(state.orders):
        if state.tie_mode == "stable":
            auroc, ap = sorted_metrics(yf[order])
            s_auroc, s_ap = sorted_metrics(p[order])
            cells = (auroc, ap, s_auroc, s_ap)
        else:
            ids = tuple(state.item_ids[i] for i in order)
            ss = LabeledScoreSet(
                ids, state.sorted_scores[k], p[order], y[order], is_sorted=True
            )
            cells = tuple(metric_quad(ss, state.tie_mode).as_dict().values())
        for c, v in enumerate(cells):
            if is_defined(v):
                out[k, c] = v
    return out


def _correlate(values: np.ndarray, original: tuple):
    """Per-metric (rho, tau) against the original ranks; NaN if undefined.

    Also returns the per-metric skip flags for degenerate label draws.
    """
    result = np.full((len(METRIC_NAMES), 2), np.nan)
    skipped = np.zeros(len(METRIC_NAMES), dtype=bool)
    for c in range(len(METRIC_NAMES)):
        if original[c] is None:
            skipped[c] = True
            continue
        column = values[:, c]
        if np.isnan(column).any():
            skipped[c] = True
            continue
        ranks = average_ranks(column)
        rho = spearman_rho(ranks, original[c])
        tau = kendall_tau(ranks, original[c])
        result[c, 0] = rho if is_defined(rho) else np.nan
        result[c, 1] = tau if is_defined(tau) else np.nan
    return result, skipped


def _run_iterations(state: _BootstrapState, indices: Sequence[int]):
    corr = np.empty((len(indices), len(METRIC_NAMES), 2))
    skipped = np.empty((len(indices), len(METRIC_NAMES)), dtype=bool)
    for row, b in enumerate(indices):
        rng = iteration_rng(state.seed, b)
        values = resample_flat(state.values, state.offsets, state.counts, rng)
        p, y, _ = state.pipeline.labels_from_flat(
            values, state.offsets, state.counts, state.item_ids
        )
        corr[row], skipped[row] = _correlate(_model_metrics(state, p, y), state.original)
    return list(indices), corr, skipped


def _chunks(n: int, parts: int) -> list[range]:
    parts = max(1, min(parts, n))
    bounds = [round(k * n / parts) for k in range(parts + 1)]
    return [range(bounds[k], bounds[k + 1]) for k in range(parts)]


def _mean(xs: np.ndarray) -> float | Undefined:
    xs = xs[~np.isnan(xs)]
    if len(xs) == 0:
        return Undefined("no defined iterations")
    return math.fsum(xs) / len(xs)


def bootstrap_stability(
    scores: Mapping[str, Sequence[float]],
    annotations: AnnotationTable,
    config: BootstrapConfig,
    workers: int = 1,
) -> StabilityReport:
    """Annotation-bootstrap stability of model rankings under each metric.

    ``scores`` maps model id to scores aligned with ``annotations.item_ids``.
    Output is identical for any ``workers`` count given the same config.
    """
    models = tuple(sorted(scores))
    if len(models) < 2:
        raise SoftEvalError("stability analysis needs at least 2 models")
    if len(annotations) == 0:
        raise EmptyAnnotationsError("annotation table is empty")
    pipeline = config.pipeline or LabelPipeline(annotations.scale, ThresholdRule())
    if pipeline.scale != annotations.scale:
        raise SoftEvalError("pipeline scale differs from annotation scale")
    item_ids = annotations.item_ids
    orders = []
    sorted_scores = []
    for m in models:
        s = np.asarray(scores[m], dtype=np.float64)
        if s.shape != (len(item_ids),):
            raise SoftEvalError(f"model {m!r}: scores not aligned with annotated items")
        order = canonical_order(s, item_ids)
        orders.append(order)
        sorted_scores.append(s[order])
    flat = annotations.flat
    state = _BootstrapState(
        flat.values,
        flat.offsets,
        flat.counts,
        item_ids,
        tuple(orders),
        tuple(sorted_scores),
        pipeline,
        config.seed,
        config.tie_mode,
        original=(),
    )

    p0, y0, _ = pipeline.labels_from_flat(flat.values, flat.offsets, flat.counts, item_ids)
    base = _model_metrics(state, p0, y0)
    original = []
    original_rankings: dict[str, ModelRanking | Undefined] = {}
    for c, name in enumerate(METRIC_NAMES):
        if np.isnan(base[:, c]).any():
            original.append(None)
            original_rankings[name] = Undefined("metric undefined on original labels")
        else:
            ranks = average_ranks(base[:, c])
            original.append(ranks)
            original_rankings[name] = ModelRanking(
                name, {m: float(r) for m, r in zip(models, ranks)}
            )
    state = replace(state, original=tuple(original))

    n = config.iterations
    corr = np.empty((n, len(METRIC_NAMES), 2))
    skipped = np.empty((n, len(METRIC_NAMES)), dtype=bool)
    chunks = _chunks(n, workers)
    if workers <= 1:
        results = [_run_iterations(state, ch) for ch in chunks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_iterations, [state] * len(chunks), chunks))
    for idx, c, s in results:
        corr[idx] = c
        skipped[idx] = s

    metrics = {}
    for c, name in enumerate(METRIC_NAMES):
        ok = ~skipped[:, c]
        metrics[name] = MetricStability(
            metric=name,
            mean_spearman=_mean(corr[ok, c, 0]),
            mean_kendall=_mean(corr[ok, c, 1]),
            skipped_iterations=int(np.count_nonzero(skipped[:, c])),
            undefined_spearman=int(np.count_nonzero(np.isnan(corr[ok, c, 0]))),
            undefined_kendall=int(np.count_nonzero(np.isnan(corr[ok, c, 1]))),
        )

    pairs = []
    for ordinary, soft in METRIC_PAIRS:
        co = METRIC_NAMES.index(ordinary)
        cs = METRIC_NAMES.index(soft)
        for s_idx, stat in ((1, "kendall"), (0, "spearman")):
            a = np.where(skipped[:, cs], np.nan, corr[:, cs, s_idx])
            b = np.where(skipped[:, co], np.nan, corr[:, co, s_idx])
            wins = int(np.count_nonzero(a > b))
            losses = int(np.count_nonzero(b > a))
            pairs.append(
                PairComparison(
                    ordinary, soft, stat, wins, losses, n - wins - losses,
                    sign_test(wins, losses),
                )
            )

    return StabilityReport(
        seed=config.seed,
        iterations=n,
        models=models,
        metrics=metrics,
        pairs=tuple(pairs),
        original_rankings=original_rankings,
        config={
            "iterations": n,
            "seed": config.seed,
            "tie_mode": config.tie_mode,
            **pipeline.describe(),
        },
    )
