import csv
import io
import json
import subprocess
import sys

import pytest

from softeval.cli import main
from softeval.synthetic import make_benchmark


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(map(str, argv)), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


@pytest.fixture
def enhance_like(tmp_path):
    # a: 0,1,2 -> 0.5 ; b: 2,2,1 -> 5/6 ; c: 1,1 -> 0.5 (c split across rows)
    return write(
        tmp_path / "ann.csv",
        "item_id,annotator_id,rating\n"
        "a,s1,0\na,s2,1\na,s3,2\nb,s1,2\nc,s1,1\nb,s2,2\nb,s3,1\nc,s2,1\n",
    )


@pytest.fixture
def flip_fixture(tmp_path):
    votes = {
        "i0": [0, 1, 1],
        "i1": [1, 0, 0],
        "i2": [1, 0, 1],
        "i3": [1, 1, 1],
        "i4": [0, 1, 1],
    }
    rows = ["item_id,annotator_id,rating"]
    for item, vs in votes.items():
        rows += [f"{item},r{k},{v}" for k, v in enumerate(vs)]
    ann = write(tmp_path / "votes.csv", "\n".join(rows) + "\n")
    a = write(
        tmp_path / "a.csv", "item_id,score\ni0,0.35\ni1,0.15\ni2,0.45\ni3,0.25\ni4,0.05\n"
    )
    b = write(
        tmp_path / "b.csv", "item_id,score\ni0,0.15\ni1,0.35\ni2,0.05\ni3,0.45\ni4,0.25\n"
    )
    return ann, a, b


def synthetic_files(tmp_path, n_items=60, seed=0, unanimous=False):
    bench = make_benchmark(n_items=n_items, n_models=3, seed=seed)
    rows = ["item_id,annotator_id,rating"]
    for item, truth in zip(bench.annotations.items, bench.truth):
        ratings = [float(truth)] * 3 if unanimous else item.ratings
        rows += [f"{item.item_id},a{k},{r:g}" for k, r in enumerate(ratings)]
    ann = write(tmp_path / "ann.csv", "\n".join(rows) + "\n")
    ids = bench.annotations.item_ids
    wide = ["item_id," + ",".join(f"score_{m}" for m in sorted(bench.scores))]
    for k, item in enumerate(ids):
        wide.append(item + "," + ",".join(repr(float(bench.scores[m][k])) for m in sorted(bench.scores)))
    scores = write(tmp_path / "scores.csv", "\n".join(wide) + "\n")
    return ann, scores


class TestAggregate:
    def test_hand_checkable(self, enhance_like, tmp_path):
        out = tmp_path / "labels.csv"
        code, _, err = run(
            "aggregate", "--annotations", enhance_like,
            "--scale-min", 0, "--scale-max", 2, "--out", out,
        )
        assert code == 0, err
        rows = list(csv.DictReader(out.open()))
        assert [r["item_id"] for r in rows] == ["a", "b", "c"]
        assert [float(r["p"]) for r in rows] == pytest.approx([0.5, 5 / 6, 0.5])
        assert [r["y"] for r in rows] == ["0", "1", "0"]

    def test_inclusive_threshold(self, enhance_like):
        code, out, _ = run(
            "aggregate", "--annotations", enhance_like,
            "--scale-min", 0, "--scale-max", 2, "--inclusive",
        )
        assert code == 0
        assert [r["y"] for r in csv.DictReader(io.StringIO(out))] == ["1", "1", "1"]

    def test_deterministic(self, enhance_like):
        args = ("aggregate", "--annotations", enhance_like, "--scale-min", 0, "--scale-max", 2)
        assert run(*args)[1] == run(*args)[1]

    def test_empty_file(self, tmp_path):
        empty = write(tmp_path / "empty.csv", "")
        code, _, err = run(
            "aggregate", "--annotations", empty, "--scale-min", 0, "--scale-max", 1
        )
        assert code == 2 and "empty" in err

    def test_schema_error_has_line(self, tmp_path):
        bad = write(tmp_path / "bad.csv", "item_id,annotator_id,rating\na,x,1\nb,x,oops\n")
        code, _, err = run(
            "aggregate", "--annotations", bad, "--scale-min", 0, "--scale-max", 1
        )
        assert code == 2 and "bad.csv:3:" in err

    def test_scale_required(self, enhance_like):
        code, _, err = run("aggregate", "--annotations", enhance_like)
        assert code == 2 and "scale" in err

    def test_majority_tie_error_policy(self, tmp_path):
        ann = write(tmp_path / "v.csv", "item_id,annotator_id,rating\na,1,1\na,2,0\n")
        code, _, err = run(
            "aggregate", "--annotations", ann, "--scale-min", 0, "--scale-max", 1,
            "--binarize", "majority", "--tie-policy", "error",
        )
        assert code == 2 and "split" in err


class TestEval:
    def test_perfect_single_model(self, tmp_path):
        labels = write(tmp_path / "l.csv", "item_id,p,y\na,1,1\nb,0,0\nc,1,1\n")
        scores = write(tmp_path / "m.csv", "item_id,score\na,0.9\nb,0.1\nc,0.8\n")
        code, out, err = run("eval", "--labels", labels, "--scores", scores)
        assert code == 0, err
        report = json.loads(out)
        quad = report["models"]["m"]
        assert [quad[k] for k in ("auroc", "ap", "s_auroc", "s_ap")] == [1.0] * 4
        assert report["config"]["labels"] == str(labels)

    def test_flip_fixture(self, flip_fixture):
        ann, a, b = flip_fixture
        code, out, err = run(
            "eval", "--annotations", ann, "--scale-min", 0, "--scale-max", 1,
            "--binarize", "majority", "--scores", a, b,
        )
        assert code == 0, err
        report = json.loads(out)
        assert report["models"]["a"]["ap"] == pytest.approx(0.95)
        assert report["models"]["b"]["ap"] == pytest.approx((1 + 2 / 3 + 3 / 4 + 4 / 5) / 4)
        flips = report["flips"]["ap_vs_s_ap"]["flips"]
        assert len(flips) == 1
        assert flips[0]["leader_first"] == "a" and flips[0]["leader_second"] == "b"
        assert report["flips"]["auroc_vs_s_auroc"]["flips"] == []

    def test_undefined_cells_still_exit_zero(self, tmp_path):
        labels = write(tmp_path / "l.csv", "item_id,p,y\na,0.9,1\nb,0.6,1\n")
        scores = write(tmp_path / "m.csv", "item_id,score\na,0.9\nb,0.1\n")
        code, out, _ = run("eval", "--labels", labels, "--scores", scores)
        assert code == 0
        assert json.loads(out)["models"]["m"]["auroc"] is None

    def test_unknown_item(self, tmp_path):
        labels = write(tmp_path / "l.csv", "item_id,p,y\na,1,1\nb,0,0\n")
        scores = write(tmp_path / "m.csv", "item_id,score\na,0.9\nb,0.1\nzzz,0.3\n")
        code, _, err = run("eval", "--labels", labels, "--scores", scores)
        assert code == 2 and "zzz" in err

    def test_ambiguous_model_ids(self, tmp_path):
        labels = write(tmp_path / "l.csv", "item_id,p,y\na,1,1\nb,0,0\n")
        (tmp_path / "x").mkdir()
        one = write(tmp_path / "m.csv", "item_id,score\na,0.9\nb,0.1\n")
        two = write(tmp_path / "x" / "m.csv", "item_id,score\na,0.2\nb,0.1\n")
        code, _, err = run("eval", "--labels", labels, "--scores", one, two)
        assert code == 2 and "twice" in err

    def test_manifest(self, tmp_path, flip_fixture):
        ann, a, b = flip_fixture
        manifest = write(tmp_path / "models.csv", "model_id,path\nalpha,a.csv\nbeta,b.csv\n")
        code, out, err = run(
            "eval", "--annotations", ann, "--scale-min", 0, "--scale-max", 1,
            "--manifest", manifest, "--format", "csv",
        )
        assert code == 0, err
        lines = out.splitlines()
        assert lines[0].startswith("# config: ")
        rows = list(csv.DictReader(lines[1:]))
        assert [r["model"] for r in rows] == ["alpha", "beta"]

    def test_config_file_and_override(self, tmp_path, flip_fixture):
        ann, a, b = flip_fixture
        cfg = write(
            tmp_path / "cfg.json",
            json.dumps({
                "annotations": str(ann), "scale_min": 0, "scale_max": 1,
                "scores": [str(a), str(b)], "task": "from-file", "binarize": "majority",
            }),
        )
        code, out, _ = run("--config", cfg, "eval", "--task", "from-flag")
        assert code == 0
        report = json.loads(out)
        assert report["task_id"] == "from-flag"
        assert report["config"]["binarize"] == "majority"

    def test_curves(self, tmp_path, flip_fixture):
        ann, a, b = flip_fixture
        curves = tmp_path / "curves"
        code, _, _ = run(
            "eval", "--annotations", ann, "--scale-min", 0, "--scale-max", 1,
            "--scores", a, "--curves", curves, "--out", tmp_path / "r.json",
        )
        assert code == 0
        roc = (curves / "a.roc.csv").read_text().splitlines()
        assert roc[0] == "rank,fpr,tpr" and roc[1] == "0,0.0,0.0" and len(roc) == 7


class TestBootstrap:
    def test_byte_identical_reruns(self, tmp_path):
        ann, scores = synthetic_files(tmp_path)
        args = (
            "bootstrap", "--annotations", ann, "--scale-min", 0, "--scale-max", 1,
            "--binarize", "majority", "--scores", scores, "--iterations", 25, "--seed", 7,
        )
        first = run(*args)
        assert first[0] == 0, first[2]
        assert run(*args)[1] == first[1]
        assert run(*args, "--workers", 2)[1] == first[1]

    def test_unanimous(self, tmp_path):
        ann, scores = synthetic_files(tmp_path, unanimous=True)
        code, out, err = run(
            "bootstrap", "--annotations", ann, "--scale-min", 0, "--scale-max", 1,
            "--scores", scores, "--iterations", 10,
        )
        assert code == 0, err
        report = json.loads(out)
        for m in report["metrics"].values():
            assert m["mean_spearman"] == 1.0 and m["mean_kendall"] == 1.0

    def test_noisy_counts(self, tmp_path):
        ann, scores = synthetic_files(tmp_path, n_items=100, seed=4)
        code, out, _ = run(
            "bootstrap", "--annotations", ann, "--scale-min", 0, "--scale-max", 1,
            "--binarize", "majority", "--scores", scores, "--iterations", 200, "--seed", 3,
        )
        assert code == 0
        report = json.loads(out)
        assert report["iterations"] == 200 and report["seed"] == 3
        for pair in report["pairs"].values():
            for stat in pair.values():
                assert stat["wins"] + stat["losses"] + stat["ties"] == 200

    def test_labels_only_refused(self, tmp_path):
        labels = write(tmp_path / "l.csv", "item_id,p,y\na,1,1\nb,0,0\n")
        scores = write(tmp_path / "s.csv", "item_id,score_x,score_y\na,1,2\nb,0,1\n")
        code, _, err = run("bootstrap", "--labels", labels, "--scores", scores)
        assert code == 2 and "raw annotations" in err


class TestCompare:
    def test_table_fixture(self, data_dir):
        code, out, err = run("compare", "--quads", data_dir / "benchmark_quads.csv")
        assert code == 0, err
        reports = {r["task_id"]: r for r in json.loads(out)["reports"]}
        flips = reports["VinDr-Pneumothorax"]["flips"]["auroc_vs_s_auroc"]["flips"]
        assert {tuple(f["models"]) for f in flips} == {
            ("EfficientNet-b0", "VGG-16"),
            ("EfficientNet-b0", "ViT-base"),
        }


class TestExitCodes:
    def test_usage_error_is_two(self):
        assert run("eval", "--format", "xml")[0] == 2
        assert run()[0] == 2

    def test_internal_error_is_one(self, monkeypatch, tmp_path):
        import softeval.cli as cli

        def boom(cfg, stdout):
            raise RuntimeError("kaput")

        monkeypatch.setitem(cli.COMMANDS, "compare", boom)
        code, _, err = run("compare", "--quads", "x")
        assert code == 1 and "internal error" in err

    def test_console_script(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "softeval.cli", "aggregate", "--annotations",
             str(tmp_path / "missing.csv"), "--scale-min", "0", "--scale-max", "1"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 2 and "not found" in proc.stderr
