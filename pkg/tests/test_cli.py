"""Command line interface."""

import csv
import io
import shutil
import subprocess
import sys

import numpy as np
import pytest

from smart_trees.cli import main
from smart_trees.csvio import read_dataset, read_table
from smart_trees.forward import ForwardConfig
from smart_trees.model import SmartModel, fit
from smart_trees.tree import TreeConfig


def _datagen(tmp_path, name, *args):
    path = tmp_path / f"{name}.csv"
    assert main(["datagen", name, "--output", str(path), *args]) == 0
    return path


@pytest.fixture(scope="module")
def visual_csv(tmp_path_factory):
    return _datagen(tmp_path_factory.mktemp("cli"), "visual", "--n", "200", "--seed", "0")


def _train(csv_path, model_path, *flags):
    return main(["train", str(csv_path), "--target", "y", "--output", str(model_path), "--max-degree", "2", *flags])


class TestDatagen:
    def test_header_and_truth(self, tmp_path):
        path = _datagen(tmp_path, "friedman1", "--n", "20", "--d", "7", "--truth", "--seed", "3")
        header, M = read_table(path)
        assert header == [f"x{j}" for j in range(1, 8)] + ["y", "truth"]
        assert M.shape == (20, 9)

    def test_deterministic(self, tmp_path):
        a = _datagen(tmp_path, "tree", "--n", "50", "--seed", "1")
        b = tmp_path / "b.csv"
        main(["datagen", "tree", "--n", "50", "--seed", "1", "--output", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_bad_parameter(self, tmp_path, capsys):
        assert main(["datagen", "friedman2", "--d", "5", "--output", str(tmp_path / "x.csv")]) == 2
        assert "does not accept" in capsys.readouterr().err


class TestTrain:
    def test_visual_splits(self, visual_csv, tmp_path, capsys):
        out = tmp_path / "m.json"
        assert _train(visual_csv, out) == 0
        assert SmartModel.load(out).n_leaves >= 2
        text = capsys.readouterr().out
        assert "leaves:" in text and "training RSS:" in text

    def test_huge_threshold_single_leaf(self, visual_csv, tmp_path):
        out = tmp_path / "m.json"
        assert _train(visual_csv, out, "--cv-threshold", "1e9") == 0
        assert SmartModel.load(out).n_leaves == 1

    def test_retrain_byte_identical(self, visual_csv, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        _train(visual_csv, a, "--seed", "4")
        _train(visual_csv, b, "--seed", "4")
        assert a.read_bytes() == b.read_bytes()

    def test_constant_target(self, tmp_path, capsys):
        path = tmp_path / "c.csv"
        path.write_text("a,y\n" + "".join(f"{i},3.5\n" for i in range(30)))
        out = tmp_path / "m.json"
        assert main(["train", str(path), "--target", "y", "--output", str(out)]) == 0
        assert "constant" in capsys.readouterr().err
        m = SmartModel.load(out)
        assert m.n_leaves == 1 and m.root.model.terms == ()

    def test_missing_cell(self, tmp_path, capsys):
        path = tmp_path / "bad.csv"
        path.write_text("a,y\n1,2\n3,\n")
        assert main(["train", str(path), "--target", "y", "--output", str(tmp_path / "m.json")]) == 2
        err = capsys.readouterr().err
        assert "row 3" in err and "'y'" in err and "missing" in err

    def test_non_numeric_cell(self, tmp_path, capsys):
        path = tmp_path / "bad.csv"
        path.write_text("a,y\n1,2\nfoo,3\n")
        assert main(["train", str(path), "--target", "y", "--output", str(tmp_path / "m.json")]) == 2
        err = capsys.readouterr().err
        assert "row 3" in err and "'a'" in err and "foo" in err

    def test_unknown_target(self, visual_csv, tmp_path, capsys):
        assert main(["train", str(visual_csv), "--target", "z", "--output", str(tmp_path / "m.json")]) == 2
        assert "'z'" in capsys.readouterr().err

    def test_categorical_and_ignore(self, tmp_path):
        rng = np.random.default_rng(0)
        n = 400
        g = rng.integers(0, 3, n)
        x = rng.uniform(-1, 1, n)
        y = np.where(g == 2, 4.0, 0.0) + x + rng.normal(scale=0.1, size=n)
        path = tmp_path / "cat.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["id", "g", "x", "y"])
            w.writerows([[i, g[i], x[i], y[i]] for i in range(n)])
        out = tmp_path / "m.json"
        assert main(["train", str(path), "--target", "y", "--output", str(out),
                     "--categorical", "g", "--ignore", "id"]) == 0
        m = SmartModel.load(out)
        assert m.feature_names == ["g", "x"] and m.categorical == [0]
        assert m.splits[0].categorical and m.splits[0].value == 2.0


class TestPredict:
    def test_round_trip(self, visual_csv, tmp_path):
        model_path = tmp_path / "m.json"
        _train(visual_csv, model_path)
        out = tmp_path / "p.csv"
        assert main(["predict", str(model_path), str(visual_csv), "--output", str(out)]) == 0
        header, M = read_table(out)
        src_header, src = read_table(visual_csv)
        assert header == src_header + ["prediction"]
        assert np.array_equal(M[:, :-1], src)
        # in-memory model from the same flags
        d = read_dataset(visual_csv, "y")
        ref = fit(d, ForwardConfig(max_degree=2), TreeConfig(), seed=0).predict(d.X)
        assert np.max(np.abs(M[:, -1] - ref)) <= 1e-12

    def test_empty_input(self, visual_csv, tmp_path):
        model_path = tmp_path / "m.json"
        _train(visual_csv, model_path)
        empty = tmp_path / "e.csv"
        empty.write_text("x1,y\n")
        out = tmp_path / "p.csv"
        assert main(["predict", str(model_path), str(empty), "--output", str(out)]) == 0
        assert out.read_text() == "x1,y,prediction\n"

    def test_missing_columns(self, visual_csv, tmp_path, capsys):
        model_path = tmp_path / "m.json"
        _train(visual_csv, model_path)
        other = tmp_path / "o.csv"
        other.write_text("a,b\n1,2\n")
        assert main(["predict", str(model_path), str(other)]) == 2
        assert "missing columns required by the model: ['x1']" in capsys.readouterr().err

    def test_stdout(self, visual_csv, tmp_path, capsys):
        model_path = tmp_path / "m.json"
        _train(visual_csv, model_path)
        capsys.readouterr()
        assert main(["predict", str(model_path), str(visual_csv), "--column", "yhat"]) == 0
        rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
        assert rows[0][-1] == "yhat" and len(rows) == 201

    def test_tree_leaf_probes(self, tmp_path):
        # one probe row inside each of the four leaves; leaf truths are x1, x2, x3, x4
        data = _datagen(tmp_path, "tree", "--n", "20000", "--seed", "0")
        model_path = tmp_path / "m.json"
        assert main(["train", str(data), "--target", "y", "--output", str(model_path), "--max-degree", "1"]) == 0
        probes = tmp_path / "probe.csv"
        probes.write_text("x1,x2,x3,x4\n1.5,1,0,1\n1,-0.5,0.3,1\n1,1,0.7,-1\n-1,1,0.3,-1.2\n")
        out = tmp_path / "p.csv"
        assert main(["predict", str(model_path), str(probes), "--output", str(out)]) == 0
        _, M = read_table(out)
        assert np.allclose(M[:, -1], [1.5, -0.5, 0.7, -1.2], atol=0.1)


class TestBench:
    def test_check_passes(self, tmp_path, capsys):
        out = tmp_path / "r.md"
        assert main(["bench", "--suite", "visual", "--reps", "20", "--check", "--output", str(out)]) == 0
        assert "PASS visual" in capsys.readouterr().err
        assert out.read_text().startswith("| dataset |")

    def test_check_without_assertions_fails(self, capsys):
        # quick friedman3 has no acceptance cell; --check must not report success on nothing
        assert main(["bench", "--suite", "friedman3", "--quick", "--check", "--format", "csv"]) == 1

    def test_split_table(self, capsys):
        assert main(["bench", "--suite", "synthetic", "--quick", "--splits", "--format", "csv"]) == 0
        assert "true_var,true_split,found_var,found_split" in capsys.readouterr().out


@pytest.mark.skipif(shutil.which("smart") is None, reason="console script not installed")
def test_console_script():
    res = subprocess.run(["smart", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "train" in res.stdout


def test_module_entry():
    res = subprocess.run([sys.executable, "-m", "smart_trees.cli", "datagen", "visual", "--n", "3"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.splitlines()[0] == "x1,y"
