"""Command-line entry point: ``softeval {aggregate,eval,bootstrap,compare}``.

Exit codes: 0 success, 2 input or validation error, 1 internal error.
Settings come from flags or a JSON ``--config`` file; flags win. The
effective configuration is echoed into every report.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
from pathlib import Path


from . import jsonfmt
from .errors import SoftEvalError
from .labels import (
    TIE_POLICIES,
    AggregatedLabels,
    LabelPipeline,
    MajorityRule,
    RatingScale,
    ThresholdRule,
)
from .report import build_comparison, to_flat_csv
from .softmetrics import LabeledScoreSet, metric_quad, pr_curve, roc_curve
from .stability import BootstrapConfig, bootstrap_stability
from .tables import (
    align_scores,
    read_annotations,
    read_labels,
    read_manifest,
    read_quads,
    read_scores,
    write_labels,
    write_pr,
    write_roc,
)

EXIT_OK, EXIT_INTERNAL, EXIT_INPUT = 0, 1, 2

DEFAULTS = {
    "binarize": "threshold",
    "threshold": 0.5,
    "inclusive": False,
    "tie_policy": "negative",
    "tie_mode": "stable",
    "iterations": 1000,
    "seed": 0,
    "workers": 1,
    "format": "json",
    "task": "task",
}


class UsageError(SoftEvalError):
    pass


def _add_label_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--annotations", help="long-format item_id,annotator_id,rating CSV")
    p.add_argument("--scale-min", type=float)
    p.add_argument("--scale-max", type=float)
    p.add_argument("--binarize", choices=("threshold", "majority"))
    p.add_argument("--threshold", type=float)
    strict = p.add_mutually_exclusive_group()
    strict.add_argument("--strict", dest="inclusive", action="store_false", default=None)
    strict.add_argument("--inclusive", dest="inclusive", action="store_true", default=None)
    p.add_argument("--tie-policy", choices=TIE_POLICIES)


def _add_score_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scores", nargs="+", help="score CSV(s), one model each or wide form")
    p.add_argument("--manifest", help="model_id,path CSV naming the score files")
    p.add_argument("--tie-mode", choices=("stable", "block"))


def _add_output_flags(p: argparse.ArgumentParser, formats=("json", "csv")) -> None:
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=formats)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="softeval",
        description="Uncertainty-aware ranking evaluation against soft labels.",
    )
    parser.add_argument("--config", help="JSON file with default settings")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("aggregate", help="ratings -> item_id,p,y label CSV")
    _add_label_flags(p)
    p.add_argument("--out")

    p = sub.add_parser("eval", help="ordinary and soft metrics per model")
    _add_label_flags(p)
    p.add_argument("--labels", help="pre-aggregated item_id,p,y CSV")
    _add_score_flags(p)
    p.add_argument("--task", help="task id recorded in the report")
    p.add_argument("--curves", help="directory for per-model ROC/PR curve CSVs")
    _add_output_flags(p)

    p = sub.add_parser("bootstrap", help="ranking stability under annotation resampling")
    _add_label_flags(p)
    p.add_argument("--labels", help=argparse.SUPPRESS)
    _add_score_flags(p)
    p.add_argument("--iterations", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    _add_output_flags(p)

    p = sub.add_parser("compare", help="flips and R^2 from precomputed metric values")
    p.add_argument("--quads", help="task,model,auroc,ap,s_auroc,s_ap CSV")
    _add_output_flags(p)
    return parser


def effective_config(args: argparse.Namespace) -> dict:
    """Defaults, then config file values, then explicitly given flags."""
    cfg = dict(DEFAULTS)
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise UsageError(f"config file not found: {args.config}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file {args.config}: {exc}") from None
        if not isinstance(loaded, dict):
            raise UsageError("config file must hold a JSON object")
        cfg.update({k.replace("-", "_"): v for k, v in loaded.items()})
    for key, value in vars(args).items():
        if key in ("config", "command") or value is None:
            continue
        cfg[key] = value
    if isinstance(cfg.get("scores"), str):
        cfg["scores"] = [cfg["scores"]]
    return {k: cfg[k] for k in sorted(cfg)}


def _pipeline(cfg: dict) -> LabelPipeline:
    if cfg.get("scale_min") is None or cfg.get("scale_max") is None:
        raise UsageError("--scale-min and --scale-max are required with --annotations")
    scale = RatingScale(float(cfg["scale_min"]), float(cfg["scale_max"]))
    if cfg["binarize"] == "majority":
        rule = MajorityRule(cfg["tie_policy"])
    elif cfg["binarize"] == "threshold":
        rule = ThresholdRule(float(cfg["threshold"]), bool(cfg["inclusive"]))
    else:
        raise UsageError(f"unknown binarization {cfg['binarize']!r}")
    return LabelPipeline(scale, rule)


def _labels(cfg: dict) -> AggregatedLabels:
    if cfg.get("annotations"):
        pipeline = _pipeline(cfg)
        return pipeline.aggregate(read_annotations(cfg["annotations"], pipeline.scale))
    if cfg.get("labels"):
        return read_labels(cfg["labels"])
    raise UsageError("need --annotations or --labels")


def _model_scores(cfg: dict) -> dict[str, dict[str, float]]:
    sources = []
    if cfg.get("manifest"):
        if cfg.get("scores"):
            raise UsageError("give either --manifest or --scores, not both")
        for model, path in read_manifest(cfg["manifest"]).items():
            sources.append(read_scores(path, model_id=model))
    elif cfg.get("scores"):
        sources = [read_scores(path) for path in cfg["scores"]]
    else:
        raise UsageError("need --scores or --manifest")
    models: dict[str, dict[str, float]] = {}
    for source in sources:
        for model, scores in source.items():
            if model in models:
                raise UsageError(
                    f"model id {model!r} appears twice; use --manifest to name models"
                )
            models[model] = scores
    return models


def _emit(text: str, out: str | None, stdout) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        stdout.write(text)


def _config_comment(cfg: dict) -> str:
    return "# config: " + json.dumps(cfg, sort_keys=True) + "\n"


def cmd_aggregate(cfg: dict, stdout) -> int:
    if not cfg.get("annotations"):
        raise UsageError("aggregate needs --annotations")
    labels = _labels(cfg)
    buf = io.StringIO()
    write_labels(labels, buf)
    _emit(buf.getvalue(), cfg.get("out"), stdout)
    return EXIT_OK


def cmd_eval(cfg: dict, stdout) -> int:
    labels = _labels(cfg)
    quads = {}
    sets = {}
    for model, scores in _model_scores(cfg).items():
        aligned = align_scores(scores, labels.item_ids, model)
        s = LabeledScoreSet(labels.item_ids, aligned, labels.p, labels.y)
        sets[model] = s
        quads[model] = metric_quad(s, cfg["tie_mode"])
    report = build_comparison(str(cfg["task"]), quads, cfg)
    if cfg.get("curves"):
        _write_curves(Path(cfg["curves"]), sets, cfg["tie_mode"])
    if cfg["format"] == "csv":
        text = _config_comment(cfg) + to_flat_csv([report])
    else:
        text = report.to_json()
    _emit(text, cfg.get("out"), stdout)
    return EXIT_OK


def _write_curves(directory: Path, sets: dict, tie_mode: str) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    for model, s in sets.items():
        for kind, fn, writer in (("roc", roc_curve, write_roc), ("pr", pr_curve, write_pr)):
            try:
                points = fn(s, tie_mode)
            except SoftEvalError:
                continue
            with open(directory / f"{model}.{kind}.csv", "w", encoding="utf-8", newline="") as fh:
                writer(points, fh)


def cmd_bootstrap(cfg: dict, stdout) -> int:
    if not cfg.get("annotations"):
        if cfg.get("labels"):
            raise UsageError(
                "bootstrap needs raw annotations (--annotations): aggregated labels "
                "cannot be resampled per annotator"
            )
        raise UsageError("bootstrap needs --annotations")
    pipeline = _pipeline(cfg)
    table = read_annotations(cfg["annotations"], pipeline.scale)
    models = _model_scores(cfg)
    if len(models) < 2:
        raise UsageError("bootstrap needs at least 2 models")
    aligned = {
        m: align_scores(s, table.item_ids, m) for m, s in models.items()
    }
    config = BootstrapConfig(
        iterations=int(cfg["iterations"]),
        seed=int(cfg["seed"]),
        pipeline=pipeline,
        tie_mode=cfg["tie_mode"],
    )
    workers = int(cfg["workers"])
    if workers < 1:
        raise UsageError("--workers must be >= 1")
    report = bootstrap_stability(aligned, table, config, workers=workers)
    data = report.to_dict()
    data["config"] = {k: v for k, v in cfg.items() if k != "workers"}
    if cfg["format"] == "csv":
        text = _config_comment(data["config"]) + _stability_csv(data)
    else:
        text = jsonfmt.dumps(data)
    _emit(text, cfg.get("out"), stdout)
    return EXIT_OK


def _stability_csv(data: dict) -> str:
    buf = io.StringIO()
    lines = ["metric,mean_spearman,mean_kendall,skipped_iterations"]
    for name, m in data["metrics"].items():
        cells = [
            "" if m[k] is None else jsonfmt.format_float(m[k])
            for k in ("mean_spearman", "mean_kendall")
        ]
        lines.append(",".join([name, *cells, str(m["skipped_iterations"])]))
    buf.write("\n".join(lines) + "\n")
    return buf.getvalue()


def cmd_compare(cfg: dict, stdout) -> int:
    if not cfg.get("quads"):
        raise UsageError("compare needs --quads")
    tasks = read_quads(cfg["quads"])
    reports = [build_comparison(task, quads, cfg) for task, quads in tasks.items()]
    if cfg["format"] == "csv":
        text = _config_comment(cfg) + to_flat_csv(reports)
    else:
        text = jsonfmt.dumps({"reports": [r.to_dict() for r in reports]})
    _emit(text, cfg.get("out"), stdout)
    return EXIT_OK


COMMANDS = {
    "aggregate": cmd_aggregate,
    "eval": cmd_eval,
    "bootstrap": cmd_bootstrap,
    "compare": cmd_compare,
}


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = effective_config(args)
        return COMMANDS[args.command](cfg, stdout)
    except (SoftEvalError, OSError) as exc:
        print(f"softeval {args.command}: error: {exc}", file=stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001
        print(f"softeval {args.command}: internal error: {exc!r}", file=stderr)
        return EXIT_INTERNAL


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
