"""CSV readers and writers for annotations, scores, labels, quads and curves.

Readers raise InputError with the file and line number of the first
problem. Reals are written with 17 significant digits.
"""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path
from typing import Iterable, TextIO

import numpy as np

from .errors import InputError, SoftEvalError, Undefined
from .jsonfmt import format_float
from .labels import AggregatedLabels, AnnotationTable, RatingScale, group_long_rows
from .softmetrics import METRIC_NAMES, MetricQuad, PrPoint, RocPoint

ANNOTATION_COLUMNS = ("item_id", "annotator_id", "rating")


def _open_rows(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise InputError("file not found", path) from None
    except UnicodeDecodeError as exc:
        raise InputError(f"not valid UTF-8 ({exc.reason})", path) from None
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or not any(h.strip() for h in header):
        raise InputError("empty file (header required)", path, 1)
    return path, [h.strip() for h in header], reader


def _require_columns(path, header, required):
    missing = [c for c in required if c not in header]
    if missing:
        raise InputError(f"missing column(s) {', '.join(missing)}", path, 1)
    if len(set(header)) != len(header):
        raise InputError("duplicate column names", path, 1)


def _parse_float(text: str, what: str, path, line: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise InputError(f"{what} {text!r} is not a number", path, line) from None
    if not math.isfinite(value):
        raise InputError(f"{what} {text!r} is not finite", path, line)
    return value


def read_annotations(path, scale: RatingScale) -> AnnotationTable:
    """Long-format ``item_id,annotator_id,rating`` ratings.

    Rows sharing an item id are merged into that item's rating multiset.
    """
    path, header, reader = _open_rows(path)
    _require_columns(path, header, ANNOTATION_COLUMNS)
    col = {name: header.index(name) for name in ANNOTATION_COLUMNS}
    rows = []
    for record in reader:
        line = reader.line_num
        if not record or all(not c.strip() for c in record):
            continue
        if len(record) != len(header):
            raise InputError(
                f"expected {len(header)} fields, got {len(record)}", path, line
            )
        item_id = record[col["item_id"]].strip()
        if not item_id:
            raise InputError("empty item_id", path, line)
        annotator = record[col["annotator_id"]].strip() or None
        rating = _parse_float(record[col["rating"]].strip(), "rating", path, line)
        if not scale.min_value <= rating <= scale.max_value:
            raise InputError(
                f"rating {rating!r} for item {item_id!r} outside scale "
                f"[{scale.min_value}, {scale.max_value}]",
                path,
                line,
            )
        rows.append((item_id, annotator, rating))
    if not rows:
        raise InputError("no annotation rows", path)
    return AnnotationTable(tuple(group_long_rows(rows)), scale)


def read_scores(path, model_id: str | None = None) -> dict[str, dict[str, float]]:
    """Scores per model from ``item_id,score`` or wide ``item_id,score_<model>...``.

    In the narrow form the model id is ``model_id`` or the file stem.
    """
    path, header, reader = _open_rows(path)
    _require_columns(path, header, ("item_id",))
    score_cols = [h for h in header if h != "item_id"]
    if score_cols == ["score"]:
        models = {model_id or path.stem: header.index("score")}
    elif score_cols and all(h.startswith("score_") and len(h) > 6 for h in score_cols):
        if model_id is not None:
            raise InputError("a model id cannot be assigned to a wide score file", path, 1)
        models = {h[len("score_"):]: header.index(h) for h in score_cols}
    else:
        raise InputError(
            "expected columns item_id,score or item_id,score_<model>...", path, 1
        )
    id_col = header.index("item_id")
    out: dict[str, dict[str, float]] = {m: {} for m in models}
    for record in reader:
        line = reader.line_num
        if not record or all(not c.strip() for c in record):
            continue
        if len(record) != len(header):
            raise InputError(
                f"expected {len(header)} fields, got {len(record)}", path, line
            )
        item_id = record[id_col].strip()
        if not item_id:
            raise InputError("empty item_id", path, line)
        for m, c in models.items():
            if item_id in out[m]:
                raise InputError(f"duplicate item_id {item_id!r}", path, line)
            out[m][item_id] = _parse_float(record[c].strip(), "score", path, line)
    if not any(out.values()):
        raise InputError("no score rows", path)
    return out


def read_labels(path) -> AggregatedLabels:
    """``item_id,p[,y]`` label file; an empty ``y`` cell is not allowed."""
    path, header, reader = _open_rows(path)
    _require_columns(path, header, ("item_id", "p"))
    has_y = "y" in header
    ids, ps, ys = [], [], []
    seen = set()
    for record in reader:
        line = reader.line_num
        if not record or all(not c.strip() for c in record):
            continue
        if len(record) != len(header):
            raise InputError(
                f"expected {len(header)} fields, got {len(record)}", path, line
            )
        item_id = record[header.index("item_id")].strip()
        if not item_id or item_id in seen:
            raise InputError(f"empty or duplicate item_id {item_id!r}", path, line)
        seen.add(item_id)
        p = _parse_float(record[header.index("p")].strip(), "p", path, line)
        if not 0.0 <= p <= 1.0:
            raise InputError(f"p {p!r} not in [0, 1]", path, line)
        ids.append(item_id)
        ps.append(p)
        if has_y:
            y = record[header.index("y")].strip()
            if y not in ("0", "1"):
                raise InputError(f"y {y!r} must be 0 or 1", path, line)
            ys.append(int(y))
    if not ids:
        raise InputError("no label rows", path)
    y_arr = np.array(ys, dtype=np.int8) if has_y else None
    return AggregatedLabels(tuple(ids), np.array(ps), y_arr)


def read_manifest(path) -> dict[str, Path]:
    """``model_id,path`` rows; relative paths resolve against the manifest."""
    path, header, reader = _open_rows(path)
    _require_columns(path, header, ("model_id", "path"))
    out: dict[str, Path] = {}
    for record in reader:
        line = reader.line_num
        if not record or all(not c.strip() for c in record):
            continue
        if len(record) != len(header):
            raise InputError(
                f"expected {len(header)} fields, got {len(record)}", path, line
            )
        model = record[header.index("model_id")].strip()
        target = Path(record[header.index("path")].strip())
        if not model:
            raise InputError("empty model_id", path, line)
        if model in out:
            raise InputError(f"duplicate model_id {model!r}", path, line)
        out[model] = target if target.is_absolute() else path.parent / target
    if not out:
        raise InputError("no manifest rows", path)
    return out


def read_quads(path) -> dict[str, dict[str, MetricQuad]]:
    """``task,model,auroc,ap,s_auroc,s_ap`` rows (extra columns ignored).

    Empty metric cells are read as undefined.
    """
    path, header, reader = _open_rows(path)
    _require_columns(path, header, ("task", "model") + METRIC_NAMES)
    out: dict[str, dict[str, MetricQuad]] = {}
    for record in reader:
        line = reader.line_num
        if not record or all(not c.strip() for c in record):
            continue
        if len(record) != len(header):
            raise InputError(
                f"expected {len(header)} fields, got {len(record)}", path, line
            )
        task = record[header.index("task")].strip()
        model = record[header.index("model")].strip()
        if not model:
            raise InputError("empty model", path, line)
        cells = {}
        for name in METRIC_NAMES:
            text = record[header.index(name)].strip()
            if text:
                cells[name] = _parse_float(text, name, path, line)
            else:
                cells[name] = Undefined("not provided")
        models = out.setdefault(task, {})
        if model in models:
            raise InputError(f"duplicate model {model!r} in task {task!r}", path, line)
        models[model] = MetricQuad(**cells)
    if not out:
        raise InputError("no quad rows", path)
    return out


# --- writers -----------------------------------------------------------------


def _writer(fh: TextIO):
    return csv.writer(fh, lineterminator="\n")


def write_labels(labels: AggregatedLabels, fh: TextIO) -> None:
    w = _writer(fh)
    w.writerow(["item_id", "p", "y"])
    for item_id, p, y in zip(labels.item_ids, labels.p, labels.y):
        w.writerow([item_id, format_float(p), int(y)])


def write_roc(points: Iterable[RocPoint], fh: TextIO) -> None:
    w = _writer(fh)
    w.writerow(["rank", "fpr", "tpr"])
    for pt in points:
        w.writerow([pt.rank, format_float(pt.fpr), format_float(pt.tpr)])


def write_pr(points: Iterable[PrPoint], fh: TextIO) -> None:
    w = _writer(fh)
    w.writerow(["rank", "recall", "precision"])
    for pt in points:
        prec = "" if pt.precision is None else format_float(pt.precision)
        w.writerow([pt.rank, format_float(pt.recall), prec])


def align_scores(
    scores: dict[str, float], item_ids, model: str = ""
) -> np.ndarray:
    """Scores in ``item_ids`` order; item sets must match exactly."""
    missing = [i for i in item_ids if i not in scores]
    extra = sorted(set(scores) - set(item_ids))
    if missing or extra:
        offending = sorted(set(missing) | set(extra))
        raise ItemMismatchError(model, offending)
    return np.array([scores[i] for i in item_ids], dtype=np.float64)


class ItemMismatchError(SoftEvalError):
    def __init__(self, model: str, offending: list[str]):
        self.model = model
        self.offending = offending
        shown = ", ".join(offending[:10])
        more = f" (+{len(offending) - 10} more)" if len(offending) > 10 else ""
        super().__init__(
            f"model {model!r}: {len(offending)} item id(s) differ between scores "
            f"and labels: {shown}{more}"
        )
