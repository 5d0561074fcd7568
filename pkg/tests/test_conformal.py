import math

import numpy as np
import pytest

from sparsecp import (
    AffineScore,
    AugmentedProblem,
    Dataset,
    DimensionMismatch,
    ScoreModel,
    VariantSpec,
    affine_scores,
    conformal_set,
    lars_lasso_path,
    p_value,
    score_interval,
)
from sparsecp.intervals import IntervalSet
from sparsecp.predictors import score_model_for
from oracles import grid_membership, interval_membership


def small_scores(rng, n):
    a = rng.normal(size=n) * rng.choice([0.0, 1.0], size=n, p=[0.2, 0.8])
    b = rng.normal(size=n) * rng.choice([0.0, 1.0], size=n, p=[0.2, 0.8])
    return AffineScore(a, b)


class TestAffineScores:
    def test_identity_hat_gives_zero_scores(self, rng):
        y = rng.normal(size=4)
        prob = AugmentedProblem(rng.normal(size=(5, 2)), y)
        scores = affine_scores(prob, ScoreModel(np.eye(5), np.zeros(5)))
        np.testing.assert_allclose(scores.a, 0.0, atol=1e-15)
        np.testing.assert_allclose(scores.b, 0.0, atol=1e-15)

    def test_zero_hat_gives_raw_labels(self, rng):
        y = rng.normal(size=4)
        prob = AugmentedProblem(rng.normal(size=(5, 2)), y)
        scores = affine_scores(prob, ScoreModel(np.zeros((5, 5)), np.zeros(5)))
        np.testing.assert_allclose(np.abs(scores.a[:-1]), np.abs(y))
        assert scores.a[-1] == 0.0
        np.testing.assert_allclose(scores.b, [0, 0, 0, 0, 1])

    def test_harmonization_flips_negative_slopes(self):
        scores = AffineScore([1.0, -2.0], [-3.0, 1.0])
        assert scores.b[0] == 3.0 and scores.a[0] == -1.0
        assert scores.b[1] == 1.0 and scores.a[1] == -2.0

    def test_matches_direct_augmented_residuals(self, rng):
        # smoother built at a transition point reproduces |y_tilde - fit|
        # from the closed-form coefficients on a grid of candidate labels
        x = rng.normal(size=(10, 3))
        y = x @ np.array([2.0, 0.0, -1.0]) + 0.1 * rng.normal(size=10)
        x_new = rng.normal(size=3)
        path = lars_lasso_path(Dataset(x, y))
        step = path.steps[-1]
        x_tilde = np.vstack([x, x_new])
        model = score_model_for(VariantSpec("colp"), step.lam, step.active_set, step.signs, x_tilde)
        scores = affine_scores(AugmentedProblem(x_tilde, y), model)
        act = list(step.active_set)
        xk = x_tilde[:, act]
        for cand in np.linspace(-4, 4, 9):
            y_tilde = np.append(y, cand)
            beta = np.linalg.solve(xk.T @ xk, xk.T @ y_tilde - 0.5 * step.lam * step.signs)
            direct = np.abs(y_tilde - xk @ beta)
            np.testing.assert_allclose(scores.alpha(cand), direct, atol=1e-8)

    def test_dimension_mismatch(self, rng):
        prob = AugmentedProblem(rng.normal(size=(5, 2)), rng.normal(size=4))
        with pytest.raises(DimensionMismatch):
            affine_scores(prob, ScoreModel(np.eye(4), np.zeros(4)))

    def test_asymmetric_hat_rejected(self):
        hat = np.array([[0.0, 1.0], [0.0, 0.0]])
        with pytest.raises(ValueError):
            ScoreModel(hat, np.zeros(2))

    def test_projection_hat_idempotent(self, rng):
        x = rng.normal(size=(8, 2))
        y = rng.normal(size=8)
        x_tilde = np.vstack([x, rng.normal(size=2)])
        step = lars_lasso_path(Dataset(x, y)).steps[-1]
        model = score_model_for(VariantSpec("colp"), step.lam, step.active_set, step.signs, x_tilde)
        np.testing.assert_allclose(model.hat @ model.hat, model.hat, atol=1e-8)


class TestScoreInterval:
    def test_equal_rows_give_reals(self):
        s = AffineScore([1.0, 1.0], [2.0, 2.0])
        assert score_interval(0, s) == IntervalSet.reals()

    def test_flat_comparisons(self):
        assert score_interval(0, AffineScore([3.0, 1.0], [0.0, 0.0])) == IntervalSet.reals()
        assert score_interval(0, AffineScore([1.0, 3.0], [0.0, 0.0])) == IntervalSet.empty()
        assert score_interval(0, AffineScore([-3.0, 3.0], [0.0, 0.0])) == IntervalSet.reals()

    def test_hand_worked_interval(self):
        # |3 + y| >= |2y| exactly on [-1, 3]
        s = AffineScore([3.0, 0.0], [1.0, 2.0])
        assert score_interval(0, s).approx_equal(IntervalSet.from_pairs([(-1.0, 3.0)]))

    def test_half_line_split(self):
        # b_i == b_n != 0: |4 + y| >= |y| exactly on [-2, inf)
        s = AffineScore([4.0, 0.0], [1.0, 1.0])
        got = score_interval(0, s)
        assert got.approx_equal(IntervalSet.from_pairs([(-2.0, math.inf)]))

    def test_self_comparison_is_reals(self, rng):
        s = small_scores(rng, 6)
        assert score_interval(5, s) == IntervalSet.reals()

    def test_shapes_match_dense_grid(self, rng):
        for _ in range(200):
            s = small_scores(rng, int(rng.integers(2, 8)))
            i = int(rng.integers(0, s.n))
            region = score_interval(i, s)
            ys = np.linspace(-30, 30, 4001)
            want = np.abs(s.a[i] + s.b[i] * ys) >= np.abs(s.a[-1] + s.b[-1] * ys)
            got = interval_membership(region, ys)
            edges = np.array(region.endpoints())
            fuzzy = np.zeros(ys.shape, bool)
            for e in edges:
                fuzzy |= np.abs(ys - e) <= 2e-2
            assert np.array_equal(want[~fuzzy], got[~fuzzy])


class TestConformalSet:
    def test_epsilon_below_one_over_n_gives_reals(self, rng):
        s = small_scores(rng, 8)
        assert conformal_set(s, 0.1) == IntervalSet.reals()  # 1/n = 0.125

    def test_identical_rows_give_reals(self):
        s = AffineScore([0.0, 0.0], [1.0, 1.0])
        assert conformal_set(s, 0.7) == IntervalSet.reals()

    def test_matches_grid_oracle(self, rng):
        for _ in range(60):
            s = small_scores(rng, int(rng.integers(2, 13)))
            eps = float(rng.uniform(0.05, 0.9))
            got = conformal_set(s, eps)
            ends = got.endpoints()
            width = 15 + (max(abs(e) for e in ends) if ends else 0.0)
            ys = np.linspace(-width, width, 30001)
            want = grid_membership(s, eps, ys)
            have = interval_membership(got, ys)
            fuzzy = np.zeros(ys.shape, bool)
            for e in ends:
                fuzzy |= np.abs(ys - e) <= 1e-9
            assert np.array_equal(want[~fuzzy], have[~fuzzy])

    def test_epsilon_validation(self, rng):
        s = small_scores(rng, 4)
        for bad in (0.0, 1.0, -0.2, 1.5):
            with pytest.raises(ValueError):
                conformal_set(s, bad)

    def test_nesting_in_epsilon(self, rng):
        for _ in range(30):
            s = small_scores(rng, int(rng.integers(2, 10)))
            eps1, eps2 = sorted(rng.uniform(0.05, 0.95, size=2))
            assert conformal_set(s, eps2).issubset(conformal_set(s, eps1))

    def test_isolated_point_retained(self):
        # the identically-zero pair ties the query only at y = 0, so at a
        # threshold needing all three pairs the set degenerates to {0}
        s = AffineScore([0.0, 5.0, 0.0], [0.0, 0.0, 1.0])
        got = conformal_set(s, 0.75)
        assert got.approx_equal(IntervalSet.point(0.0))
        assert got.contains(0.0)
        assert not got.contains(0.5)
        assert not got.contains(-3.0)


class TestPValue:
    def test_single_row(self):
        s = AffineScore([0.5], [1.0])
        assert p_value(3.0, s) == 1.0
        assert p_value(-0.5, s) == 1.0

    def test_zero_query_score_is_maximal(self):
        s = AffineScore([1.0, 2.0, -1.0], [0.0, 0.0, 1.0])
        assert p_value(1.0, s) == 1.0

    def test_range(self, rng):
        for _ in range(50):
            s = small_scores(rng, int(rng.integers(1, 9)))
            p = p_value(float(rng.normal()), s)
            assert 1.0 / s.n <= p <= 1.0

    def test_consistent_with_conformal_set(self, rng):
        for _ in range(40):
            s = small_scores(rng, int(rng.integers(2, 10)))
            eps = float(rng.uniform(0.05, 0.95))
            cset = conformal_set(s, eps)
            for y in rng.normal(scale=4.0, size=8):
                if p_value(float(y), s) > eps:
                    assert cset.contains(float(y))
                elif p_value(float(y), s) < eps - 1e-12:
                    assert not cset.contains(float(y))

    def test_harmonization_invariance(self, rng):
        for _ in range(40):
            n = int(rng.integers(2, 10))
            a = rng.normal(size=n)
            b = rng.normal(size=n)
            flip = rng.choice([1.0, -1.0], size=n)
            s1 = AffineScore(a, b)
            s2 = AffineScore(a * flip, b * flip)
            eps = float(rng.uniform(0.05, 0.95))
            assert conformal_set(s1, eps).approx_equal(conformal_set(s2, eps), tol=1e-12)
