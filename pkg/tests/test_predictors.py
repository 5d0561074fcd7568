import math

import numpy as np
import pytest

from sparsecp import (
    AllUnbounded,
    Dataset,
    EmptyPath,
    VariantSpec,
    build_family,
    conformal_set,
    fixed_lambda_set,
    lars_lasso_path,
    predict,
    select_early_stopped,
    select_n_previous_neighbors,
    select_smallest,
)
from sparsecp.conformal import AffineScore
from sparsecp.intervals import IntervalSet
from sparsecp.predictors import FamilyEntry, PredictorFamily, score_model_for


def fake_family(interval_sets, epsilon=0.1):
    dummy = AffineScore([0.0], [1.0])
    entries = tuple(
        FamilyEntry(lam=float(10 - k), active_set=(0,), conformal=s, scores=dummy)
        for k, s in enumerate(interval_sets)
    )
    return PredictorFamily(entries, epsilon, VariantSpec("colp"))


def sets_of_length(lengths):
    out = []
    for L in lengths:
        if math.isinf(L):
            out.append(IntervalSet.from_pairs([(0.0, math.inf)]))
        else:
            out.append(IntervalSet.from_pairs([(0.0, L)]))
    return out


class TestVariantSpec:
    def test_kind_normalized_and_validated(self):
        assert VariantSpec("CoLP").kind == "colp"
        with pytest.raises(ValueError):
            VariantSpec("unknown")
        with pytest.raises(ValueError):
            VariantSpec("cenep", penalty_weight=-1.0)
        with pytest.raises(ValueError):
            VariantSpec("corp", ridge_weight=-0.1)


class TestSelectionRules:
    def test_smallest_picks_minimum(self):
        fam = select_smallest(fake_family(sets_of_length([5.0, 3.2, 7.1])))
        assert fam.selected == 1

    def test_infinite_lengths_lose(self):
        fam = select_smallest(fake_family(sets_of_length([math.inf, 4.0, math.inf])))
        assert fam.selected == 1

    def test_ties_break_to_sparser_step(self):
        fam = select_smallest(fake_family(sets_of_length([3.0, 3.0])))
        assert fam.selected == 0

    def test_all_unbounded_raises(self):
        with pytest.raises(AllUnbounded):
            select_smallest(fake_family(sets_of_length([math.inf, math.inf])))

    def test_early_stop_truncates_before_blowup(self):
        fam = select_early_stopped(fake_family(sets_of_length([2.0, 2.5, 40.0, 1.0])))
        assert fam.stopped_at == 2
        assert fam.selected == 0

    def test_early_stop_no_trigger_equals_smallest(self):
        lengths = [3.0, 2.8, 2.9]
        fam = select_early_stopped(fake_family(sets_of_length(lengths)))
        assert fam.stopped_at is None
        assert fam.selected == select_smallest(fake_family(sets_of_length(lengths))).selected

    def test_early_stop_factor_validation(self):
        with pytest.raises(ValueError):
            select_early_stopped(fake_family(sets_of_length([1.0, 2.0])), factor=1.0)

    def test_npn_window_of_one_equals_early_stopped(self):
        sets = sets_of_length([4.0, 2.0, 3.0])
        a = select_n_previous_neighbors(fake_family(sets), 1)
        b = select_early_stopped(fake_family(sets))
        assert a.selected == b.selected
        assert a.final_set.approx_equal(b.final_set)

    def test_npn_unions_adjacent_sets(self):
        sets = [
            IntervalSet.from_pairs([(0.0, 2.0)]),
            IntervalSet.from_pairs([(1.0, 2.5)]),
        ]
        fam = select_n_previous_neighbors(fake_family(sets), 2)
        assert fam.selected == 1
        assert fam.final_set.approx_equal(IntervalSet.from_pairs([(0.0, 2.5)]))

    def test_npn_grows_with_window(self):
        sets = sets_of_length([5.0, 4.0, 1.0, 6.0])
        prev = None
        for n_nb in (1, 2, 3, 4):
            fam = select_n_previous_neighbors(fake_family(sets), n_nb)
            if prev is not None:
                assert prev.issubset(fam.final_set)
            prev = fam.final_set

    def test_npn_validation(self):
        with pytest.raises(ValueError):
            select_n_previous_neighbors(fake_family(sets_of_length([1.0])), 0)

    def test_argmin_invariant_under_positive_scaling(self):
        lengths = [5.0, 3.2, 7.1, 4.4]
        base = fake_family(sets_of_length(lengths))
        scaled = fake_family([s.scaled(37.5) for s in sets_of_length(lengths)])
        assert select_smallest(base).selected == select_smallest(scaled).selected
        assert select_early_stopped(base).selected == select_early_stopped(scaled).selected


class TestBuildFamily:
    def test_single_step_toy_matches_hand_built_set(self):
        data = Dataset(np.array([[1.0], [2.0], [3.0]]), np.array([2.1, 3.9, 6.2]))
        x_new = np.array([1.5])
        eps = 0.45
        fam = build_family(data, x_new, eps, VariantSpec("colp"))
        assert len(fam) == 1

        step = lars_lasso_path(data).steps[0]
        x_tilde = np.vstack([data.x, x_new])
        model = score_model_for(VariantSpec("colp"), step.lam, step.active_set, step.signs, x_tilde)
        resid = np.eye(4) - model.hat
        a = resid @ np.append(data.y, 0.0) - model.offset
        b = resid[:, -1]
        expected = conformal_set(AffineScore(a, b), eps)
        assert fam.entries[0].conformal.approx_equal(expected)

    def test_empty_path_raises(self):
        data = Dataset(np.array([[1.0], [2.0], [3.0]]), np.zeros(3))
        with pytest.raises(EmptyPath):
            build_family(data, np.array([1.0]), 0.1, VariantSpec("colp"))

    def test_epsilon_validated(self, rng):
        data = Dataset(rng.normal(size=(6, 2)), rng.normal(size=6))
        with pytest.raises(ValueError):
            build_family(data, rng.normal(size=2), 1.2, VariantSpec("colp"))

    def test_all_variants_produce_families(self, rng):
        x = rng.normal(size=(15, 4))
        y = x @ np.array([3.0, -2.0, 0.0, 0.0]) + 0.3 * rng.normal(size=15)
        data = Dataset(x, y)
        x_new = rng.normal(size=4)
        for kind in ("colp", "corp", "corlap", "cenep", "cosmolap"):
            fam = build_family(data, x_new, 0.2, VariantSpec(kind, penalty_weight=0.5))
            assert len(fam) >= 1
            assert all(e.conformal is not None for e in fam.entries)


class TestVariantDegeneracies:
    def test_corlap_zero_ridge_equals_colp_at_zero_lambda(self, rng):
        x = rng.normal(size=(12, 3))
        y = rng.normal(size=12)
        x_tilde = np.vstack([x, rng.normal(size=3)])
        step = lars_lasso_path(Dataset(x, y)).steps[-1]
        ridge0 = score_model_for(
            VariantSpec("corlap", ridge_weight=0.0), step.lam, step.active_set, step.signs, x_tilde
        )
        colp0 = score_model_for(VariantSpec("colp"), 0.0, step.active_set, step.signs, x_tilde)
        np.testing.assert_allclose(ridge0.hat, colp0.hat, atol=1e-10)
        np.testing.assert_allclose(ridge0.offset, colp0.offset, atol=1e-12)

    def test_cenep_offset_has_no_half_by_default(self, rng):
        x = rng.normal(size=(10, 3))
        y = rng.normal(size=10)
        x_tilde = np.vstack([x, rng.normal(size=3)])
        step = lars_lasso_path(Dataset(x, y)).steps[-1]
        full = score_model_for(VariantSpec("cenep"), step.lam, step.active_set, step.signs, x_tilde)
        half = score_model_for(
            VariantSpec("cenep", half_offset=True), step.lam, step.active_set, step.signs, x_tilde
        )
        np.testing.assert_allclose(full.offset, 2.0 * half.offset, atol=1e-12)
        colp = score_model_for(VariantSpec("colp"), step.lam, step.active_set, step.signs, x_tilde)
        np.testing.assert_allclose(half.offset, colp.offset, atol=1e-12)

    def test_cosmolap_couples_sorted_columns(self, rng):
        # entry order differs from index order; the fused penalty must see
        # index order, so a permuted active set yields the same smoother
        x = rng.normal(size=(14, 4))
        y = rng.normal(size=14)
        x_tilde = np.vstack([x, rng.normal(size=4)])
        spec = VariantSpec("cosmolap", penalty_weight=0.8)
        m1 = score_model_for(spec, 1.5, (2, 0, 3), np.array([1.0, -1.0, 1.0]), x_tilde)
        m2 = score_model_for(spec, 1.5, (0, 2, 3), np.array([-1.0, 1.0, 1.0]), x_tilde)
        np.testing.assert_allclose(m1.hat, m2.hat, atol=1e-12)
        np.testing.assert_allclose(m1.offset, m2.offset, atol=1e-12)


class TestPredict:
    def test_report_is_complete(self, rng):
        x = rng.normal(size=(20, 5))
        y = x @ np.array([4.0, 0.0, -3.0, 0.0, 0.0]) + 0.2 * rng.normal(size=20)
        data = Dataset(x, y)
        report = predict(data, rng.normal(size=5), 0.15, VariantSpec("colp"), "smallest", y_true=1.0)
        assert report.rule == "smallest"
        assert 0 <= report.selected_index < len(report.per_step)
        assert report.selected_lambda == report.per_step[report.selected_index].lam
        assert report.final_set.lebesgue_length == report.lebesgue_length
        assert all(s.p_value_true is not None for s in report.per_step)
        assert set(report.active_variables) <= set(range(5))

    def test_epsilon_below_one_over_n_warns_not_raises(self, rng):
        x = rng.normal(size=(8, 2))
        y = rng.normal(size=8)
        report = predict(Dataset(x, y), rng.normal(size=2), 0.05, VariantSpec("colp"), "smallest")
        assert report.final_set == IntervalSet.reals()
        assert math.isinf(report.lebesgue_length)
        assert report.warnings

    def test_nesting_in_epsilon(self, rng):
        x = rng.normal(size=(25, 4))
        y = x @ np.array([2.0, -1.0, 0.0, 0.0]) + 0.3 * rng.normal(size=25)
        data = Dataset(x, y)
        x_new = rng.normal(size=4)
        big = predict(data, x_new, 0.05, VariantSpec("colp"), "smallest")
        small = predict(data, x_new, 0.5, VariantSpec("colp"), "smallest")
        assert small.lebesgue_length <= big.lebesgue_length + 1e-9

    def test_rule_aliases(self, rng):
        x = rng.normal(size=(15, 3))
        y = x @ np.array([2.0, 0.0, 0.0]) + 0.1 * rng.normal(size=15)
        data = Dataset(x, y)
        x_new = rng.normal(size=3)
        a = predict(data, x_new, 0.2, VariantSpec("colp"), "stopped")
        b = predict(data, x_new, 0.2, VariantSpec("colp"), "early-stop")
        assert a.final_set.approx_equal(b.final_set)
        with pytest.raises(ValueError):
            predict(data, x_new, 0.2, VariantSpec("colp"), "bogus-rule")

    def test_standardize_changes_scaling_not_indices(self, rng):
        x = rng.normal(size=(30, 4)) * np.array([1.0, 100.0, 0.01, 1.0])
        y = x @ np.array([3.0, 0.02, 0.0, 0.0]) + 0.2 * rng.normal(size=30)
        data = Dataset(x, y)
        x_new = rng.normal(size=4) * np.array([1.0, 100.0, 0.01, 1.0])
        report = predict(data, x_new, 0.1, VariantSpec("colp"), "smallest", standardize=True)
        assert set(report.active_variables) <= set(range(4))
        assert np.isfinite(report.lebesgue_length)


class TestFixedLambda:
    def test_above_lambda_max_compares_raw_labels(self, rng):
        x = rng.normal(size=(19, 3))
        y = rng.normal(size=19)
        data = Dataset(x, y)
        lam_max = 2 * np.abs(x.T @ y).max()
        got = fixed_lambda_set(data, rng.normal(size=3), lam_max * 3, 0.1)
        # the no-model conformal set is the symmetric quantile band of |y|:
        # n*eps = 2 pairs must tie or beat the query, one of which is the
        # query itself, so the band runs to the largest |y_i|
        hi = np.abs(y).max()
        assert got.approx_equal(IntervalSet.from_pairs([(-hi, hi)]), tol=1e-9)

    def test_interior_lambda_uses_segment_model(self, rng):
        x = rng.normal(size=(16, 3))
        y = x @ np.array([3.0, -1.0, 0.0]) + 0.2 * rng.normal(size=16)
        data = Dataset(x, y)
        path = lars_lasso_path(data)
        lam = 0.5 * (path.steps[0].lam + path.steps[-1].lam)
        cset = fixed_lambda_set(data, rng.normal(size=3), lam, 0.2, path=path)
        assert cset.lebesgue_length > 0
