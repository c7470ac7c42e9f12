"""Basis factors, terms, design matrices and node-model prediction."""

import numpy as np
import pytest

from smart_trees.basis import (HINGE_NEG, HINGE_POS, LINEAR, BasisTerm, Factor, NodeModel,
                               StructuralError, design_matrix, eval_factor, predict, predict_row, term)
from smart_trees.forward import refit_xy


class TestFactor:
    def test_hinge_pos_active(self):
        assert eval_factor(Factor(HINGE_POS, 0, 3.0), [5.0]) == 2.0

    def test_hinge_pos_clamped(self):
        assert eval_factor(Factor(HINGE_POS, 0, 3.0), [2.0]) == 0.0

    def test_hinge_neg(self):
        assert eval_factor(Factor(HINGE_NEG, 0, 3.0), [2.0]) == 1.0

    def test_linear_drops_knot(self):
        assert Factor(LINEAR, 1, 7.0).knot is None

    def test_hinge_needs_finite_knot(self):
        with pytest.raises(ValueError):
            Factor(HINGE_POS, 0, float("nan"))
        with pytest.raises(ValueError):
            Factor(HINGE_NEG, 0)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            Factor("Cubic", 0)

    def test_negative_feature(self):
        with pytest.raises(StructuralError):
            Factor(LINEAR, -1)

    def test_feature_out_of_range(self):
        with pytest.raises(StructuralError):
            eval_factor(Factor(LINEAR, 2), [1.0, 2.0])

    def test_vector_matches_scalar(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(50, 3))
        for f in (Factor(LINEAR, 1), Factor(HINGE_POS, 2, 0.1), Factor(HINGE_NEG, 0, -0.3)):
            assert np.array_equal(f.evaluate(X), [eval_factor(f, r) for r in X])


class TestBasisTerm:
    def test_canonical_order(self):
        a, b = Factor(HINGE_POS, 1, 0.5), Factor(LINEAR, 0)
        assert term(a, b) == term(b, a)

    def test_repeated_factor_rejected(self):
        f = Factor(LINEAR, 0)
        with pytest.raises(ValueError):
            term(f, f)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            BasisTerm(())

    def test_roundtrip(self):
        t = term(Factor(HINGE_NEG, 3, 1.25), Factor(LINEAR, 0))
        assert BasisTerm.from_dict(t.to_dict()) == t


class TestDesignMatrix:
    def test_intercept_only(self):
        B = design_matrix(NodeModel(), np.zeros((4, 2)))
        assert B.shape == (4, 1)
        assert np.all(B == 1.0)

    def test_single_linear(self):
        m = NodeModel(0.0, (term(Factor(LINEAR, 0)),), (0.0,))
        assert np.array_equal(design_matrix(m, np.array([[1.0], [2.0]])), [[1, 1], [1, 2]])

    def test_product_term(self):
        # (3 - 1)_+ * 2 by hand
        m = NodeModel(0.0, (term(Factor(HINGE_POS, 0, 1.0), Factor(LINEAR, 1)),), (0.0,))
        assert design_matrix(m, np.array([[3.0, 2.0]]))[0, 1] == 4.0

    def test_structural_error(self):
        m = NodeModel(0.0, (term(Factor(LINEAR, 3)),), (1.0,))
        with pytest.raises(StructuralError):
            design_matrix(m, np.zeros((2, 2)))


class TestNodeModel:
    def test_coefficient_count_checked(self):
        with pytest.raises(ValueError):
            NodeModel(0.0, (term(Factor(LINEAR, 0)),), ())

    def test_intercept_prediction(self):
        assert np.all(predict(NodeModel(3.5), np.zeros((3, 2))) == 3.5)

    def test_linear_prediction(self):
        m = NodeModel(0.0, (term(Factor(LINEAR, 0)),), (2.0,))
        assert predict_row(m, [3.0]) == 6.0

    def test_fit_line(self):
        # closed-form OLS oracle: y = 2x + 1 is reproduced exactly
        x = np.linspace(-2, 3, 17)[:, None]
        m = refit_xy(NodeModel(0.0, (term(Factor(LINEAR, 0)),), (0.0,)), x, 2 * x[:, 0] + 1)
        assert np.allclose(predict(m, x), 2 * x[:, 0] + 1, atol=1e-8)

    def test_knot_count_dedupes(self):
        h = Factor(HINGE_POS, 0, 1.0)
        g = Factor(HINGE_NEG, 0, 1.0)
        m = NodeModel(0.0, (term(h), term(g), term(h, Factor(LINEAR, 1))), (0.0, 0.0, 0.0))
        assert m.knot_count == 1
        assert m.n_params == 4

    def test_roundtrip(self):
        m = NodeModel(1.5, (term(Factor(HINGE_POS, 0, 0.25)),), (-2.0,))
        assert NodeModel.from_dict(m.to_dict()) == m

    def test_row_matches_matrix(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(20, 2))
        m = NodeModel(0.3, (term(Factor(HINGE_POS, 0, 0.1), Factor(LINEAR, 1)), term(Factor(HINGE_NEG, 1, 0.0))),
                      (1.5, -0.7))
        assert np.allclose(predict(m, X), [predict_row(m, r) for r in X], atol=1e-14)
