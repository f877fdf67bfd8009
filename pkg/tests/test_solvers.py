import numpy as np
import pytest

from abprune import FitResult, LassoConfig, kkt_violation, lasso_cd, ols_min_norm
from abprune.solvers import gram_ols_min_norm, lasso_gram


def random_instance(rng, n, m, standardized=True):
    x = rng.standard_normal((n, m))
    if standardized:
        x = (x - x.mean(axis=0)) / x.std(axis=0)
    y = x @ rng.standard_normal(m) * 0.5 + rng.standard_normal(n)
    return x, y


class TestOlsMinNorm:
    def test_exact_interpolation_identity(self):
        fit = ols_min_norm(np.eye(2), [1.0, 2.0])
        np.testing.assert_allclose(fit.weights, [1.0, 2.0], atol=1e-14)

    def test_mean_minimizes(self):
        fit = ols_min_norm([[1.0], [1.0]], [1.0, 3.0])
        np.testing.assert_allclose(fit.weights, [2.0], atol=1e-14)

    def test_duplicated_column_splits_equally(self, rng):
        c = rng.standard_normal(20)
        x = np.column_stack([c, c])
        y = rng.standard_normal(20)
        fit = ols_min_norm(x, y)
        oracle = np.linalg.pinv(x) @ y
        np.testing.assert_allclose(fit.weights, oracle, atol=1e-10)
        assert fit.weights[0] == pytest.approx(fit.weights[1], rel=1e-10)

    def test_full_rank_square_is_exact_solve(self, rng):
        x = rng.standard_normal((6, 6)) + 3 * np.eye(6)
        y = rng.standard_normal(6)
        fit = ols_min_norm(x, y)
        np.testing.assert_allclose(fit.weights, np.linalg.solve(x, y), atol=1e-10)

    def test_residual_orthogonality(self, rng):
        for _ in range(10):
            x, y = random_instance(rng, 50, 8)
            fit = ols_min_norm(x, y)
            r = y - x @ fit.weights
            xn = x / np.linalg.norm(x, axis=0)
            assert np.abs(xn.T @ r).max() <= 1e-8 * np.linalg.norm(y)

    def test_gram_path_matches_direct(self, rng):
        for _ in range(10):
            x, y = random_instance(rng, 40, 7)
            direct = ols_min_norm(x, y).weights
            via_gram = gram_ols_min_norm(x.T @ x, x.T @ y)
            np.testing.assert_allclose(via_gram, direct, atol=1e-8)

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            ols_min_norm([[np.nan]], [1.0])


class TestLassoCd:
    def test_lambda_zero_matches_ols(self, rng):
        x, y = random_instance(rng, 60, 6)
        lasso = lasso_cd(x, y, LassoConfig(lam=0.0, penalize_constant=True))
        ols = ols_min_norm(x, y)
        np.testing.assert_allclose(lasso.weights, ols.weights, atol=1e-6)
        assert lasso.objective == pytest.approx(ols.objective, abs=1e-8)

    def test_above_critical_lambda_all_zero(self, rng):
        x, y = random_instance(rng, 80, 5)
        lam_max = np.abs(x.T @ y).max() / len(y)
        fit = lasso_cd(x, y, LassoConfig(lam=lam_max * 1.001, penalize_constant=True))
        np.testing.assert_array_equal(fit.weights, np.zeros(5))
        assert fit.support.size == 0

    def test_single_feature_soft_threshold_closed_form(self):
        # X^T X / N = 1, X^T y / N = 0.5, lam = 0.2 -> w = S(0.5, 0.2) = 0.3
        x = np.array([[1.0], [-1.0], [1.0], [-1.0]])
        y = 0.5 * x[:, 0]
        fit = lasso_cd(x, y, LassoConfig(lam=0.2, penalize_constant=True))
        assert fit.weights[0] == pytest.approx(0.3, abs=1e-10)
        assert kkt_violation(x, y, fit.weights, 0.2) < 1e-12

    def test_exact_zeros_and_support(self, rng):
        x, y = random_instance(rng, 100, 12)
        fit = lasso_cd(x, y, LassoConfig(lam=0.15, penalize_constant=True))
        zero_idx = np.setdiff1d(np.arange(12), fit.support)
        assert np.all(fit.weights[zero_idx] == 0.0)
        assert np.all(fit.weights[fit.support] != 0.0)

    def test_kkt_certificate_on_random_instances(self, rng):
        for _ in range(25):
            n = int(rng.integers(5, 200))
            m = int(rng.integers(1, 30))
            x = rng.standard_normal((n, m))
            y = rng.standard_normal(n)
            lam = 10 ** rng.uniform(-6, 0)
            fit = lasso_cd(x, y, LassoConfig(lam=lam, penalize_constant=True))
            assert fit.converged
            assert kkt_violation(x, y, fit.weights, lam) <= 1e-6

    def test_unpenalized_constant_column(self, rng):
        x = np.hstack([rng.standard_normal((50, 3)), np.ones((50, 1))])
        y = rng.standard_normal(50) + 5.0
        fit = lasso_cd(x, y, LassoConfig(lam=10.0), constant_col=3)
        # heavy penalty kills every slope but the free intercept fits the mean
        np.testing.assert_array_equal(fit.weights[:3], np.zeros(3))
        assert fit.weights[3] == pytest.approx(y.mean(), rel=1e-6)

    def test_constant_column_autodetected(self, rng):
        x = np.hstack([rng.standard_normal((50, 3)), np.full((50, 1), 2.0)])
        y = rng.standard_normal(50) + 5.0
        fit = lasso_cd(x, y, LassoConfig(lam=10.0))
        assert fit.weights[3] != 0.0

    def test_objective_nonincreasing_in_debug_mode(self, rng):
        x, y = random_instance(rng, 120, 15)
        fit, objectives = lasso_cd(x, y, LassoConfig(lam=0.01, penalize_constant=True), debug=True)
        assert len(objectives) == fit.iterations
        diffs = np.diff(objectives)
        assert np.all(diffs <= 1e-12 * max(1.0, objectives[0]))

    def test_converged_false_only_when_max_iter_hit(self, rng):
        # the contract direction: a non-converged result implies the sweep
        # budget was exhausted, and the budget is always respected
        for max_iter in (1, 3, 10000):
            x, y = random_instance(rng, 60, 10)
            fit = lasso_cd(x, y, LassoConfig(lam=1e-6, max_iter=max_iter, penalize_constant=True))
            assert fit.iterations <= max_iter
            if not fit.converged:
                assert fit.iterations == max_iter

    def test_zero_norm_column_gets_zero(self, rng):
        x = np.hstack([rng.standard_normal((30, 2)), np.zeros((30, 1))])
        y = rng.standard_normal(30)
        fit = lasso_cd(x, y, LassoConfig(lam=0.01, penalize_constant=True))
        assert fit.weights[2] == 0.0

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            lasso_cd(np.array([[1.0], [np.inf]]), [1.0, 2.0], LassoConfig(lam=0.1))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            LassoConfig(lam=-1)
        with pytest.raises(ValueError):
            LassoConfig(tol=0)
        with pytest.raises(ValueError):
            LassoConfig(max_iter=0)


class TestKktViolation:
    def test_zero_weights_above_critical(self, rng):
        x, y = random_instance(rng, 50, 4)
        lam_max = np.abs(x.T @ y).max() / len(y)
        assert kkt_violation(x, y, np.zeros(4), lam_max * 1.01) == 0.0

    def test_random_nonoptimal_positive(self, rng):
        x, y = random_instance(rng, 50, 4)
        assert kkt_violation(x, y, rng.standard_normal(4), 0.1) > 0.0

    def test_dimension_check(self, rng):
        x, y = random_instance(rng, 10, 3)
        with pytest.raises(ValueError):
            kkt_violation(x, y, np.zeros(5), 0.1)


class TestLassoGram:
    def test_matches_design_space_solver(self, rng):
        x, y = random_instance(rng, 80, 9)
        cfg = LassoConfig(lam=0.05, penalize_constant=True)
        via_design = lasso_cd(x, y, cfg)
        via_gram = lasso_gram(x.T @ x, x.T @ y, float(y @ y), 80, cfg)
        np.testing.assert_allclose(via_gram.weights, via_design.weights, atol=1e-10)

    def test_result_types(self, rng):
        x, y = random_instance(rng, 30, 5)
        fit = lasso_cd(x, y, LassoConfig(lam=0.1, penalize_constant=True))
        assert isinstance(fit, FitResult)
        assert fit.iterations >= 1 and np.isfinite(fit.objective)
