"""End-to-end estimator and JSON persistence."""

import json

import numpy as np
import pytest

from smart_trees.basis import predict
from smart_trees.data import Dataset
from smart_trees.datagen import gen_synthetic, gen_visual
from smart_trees.forward import ForwardConfig
from smart_trees.model import FORMAT_VERSION, SmartModel, fit, stage_predictions
from smart_trees.pruning import prune_leaf
from smart_trees.tree import TreeConfig


@pytest.fixture(scope="module")
def visual_model():
    d = gen_visual(200, seed=0)
    return d, fit(d, ForwardConfig(max_degree=2), TreeConfig(), seed=0)


class TestFit:
    def test_splits_visual(self, visual_model):
        d, m = visual_model
        assert m.n_leaves >= 2
        rmse = np.sqrt(np.mean((m.predict(d.X) - d.truth) ** 2))
        assert rmse <= 0.6

    def test_mars_mode(self):
        # an infinite gate threshold is plain MARS: one leaf, same predictions as no tree at all
        d = gen_visual(200, seed=2)
        m = fit(d, ForwardConfig(max_degree=2), TreeConfig(cv_improvement_threshold=float("inf")))
        assert m.n_leaves == 1
        ref = prune_leaf(m.stages.forward, d, ForwardConfig(max_degree=2))
        assert np.array_equal(m.predict(d.X), predict(ref, d.X))

    def test_seed_override(self):
        d = gen_visual(100, seed=1)
        m = fit(d, tree_config=TreeConfig(rng_seed=5), seed=9)
        assert m.seed == 9 and m.tree_config.rng_seed == 9

    def test_stage_predictions(self, visual_model):
        d, m = visual_model
        st = stage_predictions(m, d.X)
        assert set(st) == {"forward", "split", "pruned"}
        assert np.array_equal(st["pruned"], m.predict(d.X))
        rm = {k: np.sqrt(np.mean((v - d.truth) ** 2)) for k, v in st.items()}
        assert rm["split"] <= rm["forward"]

    def test_no_prune(self):
        d = gen_visual(200, seed=0)
        m = fit(d, prune=False, seed=0)
        assert m.stages.pruned is None
        assert np.array_equal(stage_predictions(m, d.X)["split"], m.predict(d.X))

    def test_summary(self, visual_model):
        _, m = visual_model
        text = m.summary()
        assert text.startswith(f"leaves: {m.n_leaves}")
        assert "split x1 <=" in text


class TestPersistence:
    def test_round_trip(self, visual_model, tmp_path):
        d, m = visual_model
        path = tmp_path / "m.json"
        m.save(path)
        back = SmartModel.load(path)
        rng = np.random.default_rng(0)
        X = np.vstack([d.X, rng.uniform(-1, 7, size=(50, 1))])
        assert np.allclose(back.predict(X), m.predict(X), rtol=0, atol=1e-12)
        assert back.dumps() == m.dumps()

    def test_round_trip_interactions(self, tmp_path):
        d = gen_synthetic(3, n=1500, seed=1)
        m = fit(d, ForwardConfig(max_degree=3, max_terms=21), seed=1)
        back = SmartModel.loads(m.dumps())
        assert np.max(np.abs(back.predict(d.X) - m.predict(d.X))) <= 1e-12

    def test_infinite_threshold_serialises(self):
        d = gen_visual(60, seed=3)
        m = fit(d, tree_config=TreeConfig(cv_improvement_threshold=float("inf")))
        back = SmartModel.loads(m.dumps())
        assert back.tree_config.cv_improvement_threshold == float("inf")

    def test_format_version(self, visual_model):
        _, m = visual_model
        doc = json.loads(m.dumps())
        assert doc["format_version"] == FORMAT_VERSION
        doc["format_version"] = FORMAT_VERSION + 1
        with pytest.raises(ValueError, match="format_version"):
            SmartModel.from_dict(doc)

    def test_categorical(self):
        rng = np.random.default_rng(4)
        n = 600
        X = np.column_stack([rng.integers(0, 3, n).astype(float), rng.uniform(-1, 1, n)])
        y = np.where(X[:, 0] == 1, 5.0, 0.0) + X[:, 1] + rng.normal(scale=0.1, size=n)
        d = Dataset(X, y, column_kinds=[(0.0, 1.0, 2.0), "continuous"])
        m = fit(d, ForwardConfig(max_terms=5), seed=0)
        assert m.categorical == [0]
        sp = m.splits
        assert sp and sp[0].categorical and sp[0].variable == 0 and sp[0].value == 1.0
        back = SmartModel.loads(m.dumps())
        assert np.max(np.abs(back.predict(X) - m.predict(X))) <= 1e-12
