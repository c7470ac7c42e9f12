"""Dataset generators."""

import math

import numpy as np
import pytest

from smart_trees.datagen import (GENERATORS, SYNTHETIC_RECIPES, Stream, _eval_components, friedman1_truth, friedman2_truth,
                                 friedman3_truth, gen_friedman1, gen_friedman2, gen_friedman3, gen_recipe,
                                 gen_synthetic, gen_tree_dataset, gen_visual, generate, sample_recipe, tree_truth,
                                 visual_truth)


class TestStream:
    def test_deterministic(self):
        assert np.array_equal(Stream(7).uniform(100), Stream(7).uniform(100))
        assert not np.array_equal(Stream(7).uniform(100), Stream(8).uniform(100))

    def test_uniform_is_53_bit_mantissa(self):
        # oracle: numpy's own Philox bit stream, top 53 bits
        raw = np.random.Philox(key=11).random_raw(50)
        expect = (raw >> np.uint64(11)).astype(np.float64) / 2.0 ** 53
        assert np.array_equal(Stream(11).uniform(50), expect)

    def test_normal_box_muller(self):
        u = Stream(3).uniform(4)
        r0 = math.sqrt(-2 * math.log(1 - u[0]))
        r1 = math.sqrt(-2 * math.log(1 - u[1]))
        z = Stream(3).normal(4)
        # first half of the draws feed the radii, the second half the angles
        assert z[0] == pytest.approx(r0 * math.cos(2 * math.pi * u[2]), rel=1e-14)
        assert z[1] == pytest.approx(r0 * math.sin(2 * math.pi * u[2]), rel=1e-14)
        assert z[2] == pytest.approx(r1 * math.cos(2 * math.pi * u[3]), rel=1e-14)

    def test_normal_moments(self):
        n, sigma = 100_000, 2.0
        e = Stream(0).normal(n, sigma)
        assert abs(e.mean()) <= 4 * sigma / math.sqrt(n)
        assert abs(e.var() / sigma ** 2 - 1) <= 0.05

    def test_odd_size(self):
        assert Stream(1).normal(5).shape == (5,)


class TestVisual:
    def test_branches(self):
        assert visual_truth(np.array([1.0]))[0] == pytest.approx(0.0, abs=1e-12)
        assert visual_truth(np.array([3.0]))[0] == 12.0
        assert visual_truth(np.array([5.0]))[0] == pytest.approx(0.2 * math.e ** 2, abs=1e-12)
        assert visual_truth(np.array([5.0]))[0] == pytest.approx(1.4778, abs=1e-4)

    def test_range(self):
        d = gen_visual(500, seed=1)
        assert d.X.shape == (500, 1) and d.X.min() >= 0 and d.X.max() < 6

    def test_invalid(self):
        with pytest.raises(ValueError):
            gen_visual(0)


class TestFriedman:
    def test_f1_value(self):
        x = np.full((1, 10), 0.5)
        assert friedman1_truth(x)[0] == pytest.approx(10 * math.sin(math.pi / 4) + 7.5, abs=1e-12)
        assert friedman1_truth(x)[0] == pytest.approx(14.5711, abs=1e-4)

    def test_f1_centred_square(self):
        a = np.array([[0.2, 0.3, 0.5, 0.1, 0.9]])
        b = a.copy()
        b[0, 2] = 0.9
        assert friedman1_truth(b)[0] - friedman1_truth(a)[0] == pytest.approx(20 * 0.4 ** 2)

    def test_f1_needs_five_columns(self):
        with pytest.raises(ValueError):
            gen_friedman1(10, d=4)

    def test_f2_value(self):
        # direct evaluation gives 329.69 (the 329.80 in the reference is an arithmetic slip)
        x = np.array([[100.0, 200 * math.pi, 0.5, 6.0]])
        inner = 100 * math.pi - 1 / (1200 * math.pi)
        assert friedman2_truth(x)[0] == pytest.approx(math.sqrt(1e4 + inner ** 2), rel=1e-14)
        assert friedman2_truth(x)[0] == pytest.approx(329.69, abs=0.01)

    def test_inner_vanishes(self):
        x2, x4 = 300.0, 5.0
        x = np.array([[42.0, x2, 1 / (x2 * x2 * x4), x4]])
        assert friedman2_truth(x)[0] == pytest.approx(42.0, rel=1e-12)
        assert friedman3_truth(x)[0] == pytest.approx(0.0, abs=1e-12)

    def test_f23_ranges(self):
        d = gen_friedman2(2000, seed=3)
        lo = [0, 40 * math.pi, 0, 1]
        hi = [100, 560 * math.pi, 1, 11]
        assert np.all(d.X >= lo) and np.all(d.X <= hi) and np.all(d.X[:, 0] > 0)
        assert np.array_equal(gen_friedman3(2000, seed=3).X, d.X)


class TestSynthetic:
    def test_switches(self):
        assert (SYNTHETIC_RECIPES[1].split_var, SYNTHETIC_RECIPES[1].threshold) == (0, 1.6)
        r4 = SYNTHETIC_RECIPES[4]
        assert (r4.split_var, r4.threshold, r4.ge) == (0, -2.4, True)

    def test_synthetic2_hand_value(self):
        # 2.1 + (-2.7 + 1.3 - 1.9 + 2.7*(1-2.4)_+ - 2.4*(1.2-1)_+ + 2.2*log 2 - 0.2);
        # the reference value -2.4556 is the bracket alone, without the 2.1 intercept
        bracket = -2.7 + 1.3 - 1.9 + 0.0 - 2.4 * 0.2 + 2.2 * math.log(2) - 0.2
        got = SYNTHETIC_RECIPES[2].truth(np.ones((1, 5)))[0]
        assert got == pytest.approx(2.1 + bracket, abs=1e-12)
        assert got == pytest.approx(-0.3551, abs=1e-4)

    def test_ge_switch(self):
        r = SYNTHETIC_RECIPES[4]
        x = np.zeros((2, 6))
        x[:, 5] = 1.0
        x[0, 0], x[1, 0] = -2.4, -2.4 - 1e-9
        # the boundary value takes the first branch under >=
        assert r.truth(x[:1])[0] == pytest.approx(r.intercept + _eval_components(x[:1], r.left)[0])
        assert r.truth(x[1:])[0] == pytest.approx(r.intercept + _eval_components(x[1:], r.right)[0])

    def test_log_feature_positive(self):
        for k, r in SYNTHETIC_RECIPES.items():
            d = gen_synthetic(k, n=500, seed=k)
            j = len(r.ranges) - 1
            assert d.X[:, j].min() >= 0, k
            assert np.all(np.isfinite(d.truth))

    def test_invalid_k(self):
        with pytest.raises(ValueError):
            gen_synthetic(6)

    def test_sampled_recipe(self):
        for seed in range(20):
            r = sample_recipe(seed)
            n_terms = sum(1 for c in r.left if c[0] in ("lin", "sq", "cube"))
            assert 3 <= n_terms <= 5
            d = gen_recipe(seed, n=4000)
            x = d.X[:, r.split_var]
            assert np.mean(x <= r.threshold) == pytest.approx(0.9, abs=0.03)


class TestTreeData:
    def test_branches(self):
        assert tree_truth(np.array([[1.5, 1.0, 0.0, 1.0]]))[0] == 1.5
        assert tree_truth(np.array([[-0.5, 2.0, 0.3, -1.0]]))[0] == -1.0
        assert tree_truth(np.array([[1.0, -0.4, 0.3, 1.0]]))[0] == -0.4
        assert tree_truth(np.array([[1.0, -0.4, 0.3, -1.0]]))[0] == 0.3

    def test_boundary_goes_no(self):
        # x4 == 0 is not > 0, so x1 > 0 picks x3
        assert tree_truth(np.array([[1.0, 1.0, 0.25, 0.0]]))[0] == 0.25


class TestInvariants:
    @pytest.mark.parametrize("name", sorted(GENERATORS))
    def test_noiseless_equals_truth(self, name):
        d = generate(name, n=300, sigma=0.0, seed=2)
        assert np.array_equal(d.y, d.truth)

    @pytest.mark.parametrize("name", sorted(GENERATORS))
    def test_bitwise_reproducible(self, name):
        a, b = generate(name, n=300, seed=9), generate(name, n=300, seed=9)
        assert np.array_equal(a.X, b.X) and np.array_equal(a.y, b.y)

    def test_tree_dataset_range(self):
        d = gen_tree_dataset(1000, seed=0)
        assert d.X.shape == (1000, 4) and np.all(np.abs(d.X) <= 2)

    def test_unknown(self):
        with pytest.raises(ValueError):
            generate("nope")
