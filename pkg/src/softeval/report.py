"""Ordinary-vs-soft comparison reports across models.

A report holds each model's four metric values, the model ranking under
every metric, the model pairs whose order inverts between an ordinary
metric and its soft counterpart, and the R^2 between the two score columns.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Mapping, Sequence

from . import jsonfmt
from .errors import SoftEvalError, Undefined, is_defined
from .softmetrics import METRIC_NAMES, METRIC_PAIRS, MetricQuad
from .stability import ModelRanking, pearson_r2, rank_models

R2_KEYS = {("auroc", "s_auroc"): "auroc_vs_s_auroc", ("ap", "s_ap"): "ap_vs_s_ap"}


@dataclass(frozen=True)
class Flip:
    """Two models whose relative order differs between two metrics.

    ``model_a < model_b`` lexically; ``leader_first`` / ``leader_second``
    name the better model under each metric.
    """

    model_a: str
    model_b: str
    first_metric: str
    second_metric: str
    leader_first: str
    leader_second: str

    @property
    def direction(self) -> str:
        return (
            f"{self.leader_first} leads on {self.first_metric}, "
            f"{self.leader_second} leads on {self.second_metric}"
        )

    def as_dict(self) -> dict:
        return {
            "models": [self.model_a, self.model_b],
            "metrics": [self.first_metric, self.second_metric],
            "leader_first": self.leader_first,
            "leader_second": self.leader_second,
            "direction": self.direction,
        }


@dataclass(frozen=True)
class FlipAnalysis:
    metric_pair: tuple[str, str]
    flips: tuple[Flip, ...]
    excluded: Mapping[str, str]  # model -> reason
    pairs_total: int
    pairs_excluded: int
    pairs_compared: int

    def __post_init__(self):
        if self.pairs_compared != self.pairs_total - self.pairs_excluded:
            raise AssertionError("pair accounting does not add up")

    def as_dict(self) -> dict:
        return {
            "metrics": list(self.metric_pair),
            "flips": [f.as_dict() for f in self.flips],
            "excluded_models": dict(self.excluded),
            "pairs_total": self.pairs_total,
            "pairs_excluded": self.pairs_excluded,
            "pairs_compared": self.pairs_compared,
        }


def analyze_flips(
    quads: Mapping[str, MetricQuad], metric_pair: tuple[str, str] = ("ap", "s_ap")
) -> FlipAnalysis:
    first, second = metric_pair
    for name in metric_pair:
        if name not in METRIC_NAMES:
            raise SoftEvalError(f"unknown metric {name!r}")
    models = sorted(quads)
    excluded = {}
    for m in models:
        for name in metric_pair:
            v = quads[m].get(name)
            if not is_defined(v):
                excluded[m] = f"{name} undefined: {v.reason}"
                break
    kept = [m for m in models if m not in excluded]
    flips = []
    for a, b in combinations(kept, 2):
        d1 = quads[a].get(first) - quads[b].get(first)
        d2 = quads[a].get(second) - quads[b].get(second)
        # exact metric ties leave the pair unordered, never a flip
        if d1 * d2 < 0:
            flips.append(
                Flip(
                    a, b, first, second,
                    leader_first=a if d1 > 0 else b,
                    leader_second=a if d2 > 0 else b,
                )
            )
    total = math.comb(len(models), 2)
    compared = math.comb(len(kept), 2)
    return FlipAnalysis(
        (first, second), tuple(flips), excluded, total, total - compared, compared
    )


def detect_flips(
    quads: Mapping[str, MetricQuad], metric_pair: tuple[str, str] = ("ap", "s_ap")
) -> list[Flip]:
    return list(analyze_flips(quads, metric_pair).flips)


def summarize_r2(quads: Mapping[str, MetricQuad]) -> dict[str, float | Undefined]:
    """Squared Pearson correlation between ordinary and soft score columns."""
    out = {}
    for pair, key in R2_KEYS.items():
        xs, ys = [], []
        for m in sorted(quads):
            x, y = quads[m].get(pair[0]), quads[m].get(pair[1])
            if is_defined(x) and is_defined(y):
                xs.append(x)
                ys.append(y)
        out[key] = pearson_r2(xs, ys)
    return out


def rank_by_metric(quads: Mapping[str, MetricQuad]) -> dict[str, ModelRanking]:
    """Per-metric average ranks over the models where that metric is defined."""
    rankings = {}
    for name in METRIC_NAMES:
        values = {
            m: quads[m].get(name) for m in sorted(quads) if is_defined(quads[m].get(name))
        }
        rankings[name] = rank_models(values, name)
    return rankings


def _value(v):
    return v if is_defined(v) else None


def quad_to_dict(q: MetricQuad) -> dict:
    out = {name: _value(q.get(name)) for name in METRIC_NAMES}
    out["undefined"] = {
        name: q.get(name).reason for name in METRIC_NAMES if not is_defined(q.get(name))
    }
    return out


def quad_from_dict(d: Mapping) -> MetricQuad:
    reasons = d.get("undefined", {})
    cells = {}
    for name in METRIC_NAMES:
        v = d.get(name)
        cells[name] = Undefined(reasons.get(name, "undefined")) if v is None else float(v)
    return MetricQuad(**cells)


@dataclass(frozen=True)
class ComparisonReport:
    task_id: str
    quads: Mapping[str, MetricQuad]
    rankings: Mapping[str, ModelRanking]
    flips: Mapping[tuple[str, str], FlipAnalysis]
    r2: Mapping[str, float | Undefined]
    config: Mapping = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "models": {m: quad_to_dict(q) for m, q in self.quads.items()},
            "rankings": {name: dict(r.ranks) for name, r in self.rankings.items()},
            "flips": {
                f"{a}_vs_{b}": fa.as_dict() for (a, b), fa in self.flips.items()
            },
            "r2": {
                key: {"value": _value(v), "undefined": None if is_defined(v) else v.reason}
                for key, v in self.r2.items()
            },
            "config": dict(self.config),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ComparisonReport":
        quads = {m: quad_from_dict(q) for m, q in d["models"].items()}
        return build_comparison(d["task_id"], quads, d.get("config", {}))

    def to_json(self) -> str:
        return jsonfmt.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "ComparisonReport":
        return cls.from_dict(jsonfmt.loads(text))


def build_comparison(
    task_id: str, quads: Mapping[str, MetricQuad], config: Mapping | None = None
) -> ComparisonReport:
    quads = {m: quads[m] for m in sorted(quads)}
    return ComparisonReport(
        task_id=task_id,
        quads=quads,
        rankings=rank_by_metric(quads),
        flips={pair: analyze_flips(quads, pair) for pair in METRIC_PAIRS},
        r2=summarize_r2(quads),
        config=dict(config or {}),
    )


# --- flat exports ------------------------------------------------------------

FLAT_COLUMNS = (
    ["task", "model"]
    + list(METRIC_NAMES)
    + [f"rank_{name}" for name in METRIC_NAMES]
)


def _cell(v) -> str:
    if v is None or not is_defined(v):
        return ""
    return jsonfmt.format_float(v)


def flat_rows(reports: Sequence[ComparisonReport]) -> list[list[str]]:
    rows = []
    for rep in reports:
        for m, q in rep.quads.items():
            row = [rep.task_id, m] + [_cell(q.get(name)) for name in METRIC_NAMES]
            row += [_cell(rep.rankings[name].ranks.get(m)) for name in METRIC_NAMES]
            rows.append(row)
    return rows


def to_flat_csv(reports: Sequence[ComparisonReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(FLAT_COLUMNS)
    writer.writerows(flat_rows(reports))
    return buf.getvalue()


def to_scatter_csv(reports: Sequence[ComparisonReport]) -> str:
    """(ordinary, soft) point pairs per model, one row per metric pair."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["task", "model", "pair", "ordinary", "soft"])
    for rep in reports:
        for m, q in rep.quads.items():
            for pair, key in R2_KEYS.items():
                x, y = q.get(pair[0]), q.get(pair[1])
                if is_defined(x) and is_defined(y):
                    writer.writerow([rep.task_id, m, key, _cell(x), _cell(y)])
    return buf.getvalue()
