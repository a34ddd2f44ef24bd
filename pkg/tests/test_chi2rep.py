import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import stats

from mvos.chi2rep import (
    NotPositiveSemidefiniteError,
    correlated_ratio_sample,
    ecdf_on_grid,
    quantile_grid,
    representation_distance,
    univariate_ratio_sample,
)
from mvos.dnorm import LogisticP, lambda_matrix
from mvos.orderstats import OSBatch, theoretical_sigma_equal_k, standardize_copula_case


class TestUnivariateRatio:
    def test_degenerate_case_is_uniform(self):
        # i = n = 1 gives Beta(1, 1)
        s = univariate_ratio_sample(1, 1, 20000, seed=1)
        assert abs(s.mean() - 0.5) <= 4.0 * s.std() / math.sqrt(s.size)
        assert np.all((s > 0) & (s < 1))

    def test_beta_moments(self):
        s = univariate_ratio_sample(3, 9, 10**5, seed=2)
        beta = stats.beta(3, 7)
        assert abs(s.mean() - beta.mean()) <= 4.0 * s.std() / math.sqrt(s.size)
        # variance of the sample variance via the fourth moment
        var_se = math.sqrt((stats.moment(s, 4) - s.var() ** 2) / s.size)
        assert abs(s.var() - beta.var()) <= 4.0 * var_se

    @pytest.mark.parametrize("i,n", [(1, 1), (3, 9), (50, 1000)])
    def test_two_sample_ks_vs_direct_beta(self, i, n):
        r = 20000
        s = univariate_ratio_sample(i, n, r, seed=3)
        direct = np.random.default_rng(1234).beta(i, n + 1 - i, size=r)
        assert stats.ks_2samp(s, direct).pvalue > 1e-3

    def test_index_validation(self):
        with pytest.raises(ValueError):
            univariate_ratio_sample(10, 9, 5, seed=0)
        with pytest.raises(ValueError):
            univariate_ratio_sample(0, 9, 5, seed=0)

    def test_deterministic(self):
        a = univariate_ratio_sample(3, 9, 50, seed=9)
        b = univariate_ratio_sample(3, 9, 50, seed=9)
        assert np.array_equal(a, b)


class TestCorrelatedRatio:
    def test_identity_components_independent(self):
        rv = correlated_ratio_sample(np.eye(2), 500, 22, 4000, seed=4)
        corr = np.corrcoef(rv.ratios.T)[0, 1]
        assert abs(corr) <= 4.0 / math.sqrt(rv.replications)

    def test_all_ones_components_identical(self):
        rv = correlated_ratio_sample(np.ones((2, 2)), 200, 14, 300, seed=5)
        assert_allclose(rv.ratios[:, 0], rv.ratios[:, 1], rtol=1e-12)

    def test_entries_strictly_inside_unit_interval(self):
        rv = correlated_ratio_sample(np.eye(3), 50, 5, 2000, seed=6)
        assert np.all((rv.ratios > 0.0) & (rv.ratios < 1.0))

    def test_margins_are_beta_n_minus_k_kplus1(self):
        n, k = 400, 20
        rv = correlated_ratio_sample(np.array([[1.0, 0.7], [0.7, 1.0]]), n, k, 5000, seed=7)
        cdf = stats.beta(n - k, k + 1).cdf
        for i in range(2):
            assert stats.kstest(rv.ratios[:, i], cdf).pvalue > 1e-3

    def test_margins_unaffected_by_off_diagonal(self):
        # same margin law under independent and correlated driving noise
        n, k = 300, 17
        a = correlated_ratio_sample(np.eye(2), n, k, 6000, seed=8).ratios[:, 0]
        b = correlated_ratio_sample(np.array([[1.0, 0.7], [0.7, 1.0]]), n, k, 6000, seed=9).ratios[:, 0]
        assert stats.ks_2samp(a, b).pvalue > 1e-3

    def test_psd_gate_counterexample(self):
        def pattern(a):
            return np.array([[1.0, 0.0, a], [0.0, 1.0, a], [a, a, 1.0]])

        ok = correlated_ratio_sample(pattern(3 ** -0.5), 50, 5, 10, seed=0)
        assert ok.ratios.shape == (10, 3)
        with pytest.raises(NotPositiveSemidefiniteError) as err:
            correlated_ratio_sample(pattern(3 ** -0.25), 50, 5, 10, seed=0)
        assert_allclose(err.value.min_eigenvalue, 1.0 - np.sqrt(2.0) * 3 ** -0.25, rtol=1e-9)
        assert "eigenvalue" in str(err.value)

    @pytest.mark.parametrize("d", range(2, 11))
    def test_compound_symmetry_always_accepted(self, d):
        # constant off-diagonal entries from an exchangeable tail norm
        lam = lambda_matrix(theoretical_sigma_equal_k(LogisticP(2.0), d))
        rv = correlated_ratio_sample(lam, 30, 4, 5, seed=1)
        assert rv.ratios.shape == (5, d)

    def test_standardized_covariance_matches_sigma(self):
        # the standardized ratio vector reproduces the limit covariance
        sigma = theoretical_sigma_equal_k(LogisticP(2.0), 2)
        lam = lambda_matrix(sigma)
        n, k, r = 10**4, 100, 5000
        rv = correlated_ratio_sample(lam, n, k, r, seed=10)
        t = standardize_copula_case(rv.ratios, n, np.array([k, k]))
        emp = np.cov(t.T, bias=True)
        se = math.sqrt((1.0 + sigma[0, 1] ** 2) / r)
        assert abs(emp[0, 1] - sigma[0, 1]) <= 4.0 * se
        for i in range(2):
            assert abs(emp[i, i] - 1.0) <= max(0.05, 4.0 * math.sqrt(2.0 / r))

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            correlated_ratio_sample(np.array([[1.0, 0.5], [0.4, 1.0]]), 50, 5, 5, seed=0)
        with pytest.raises(ValueError):
            correlated_ratio_sample(np.eye(2), 50, 50, 5, seed=0)
        with pytest.raises(ValueError):
            correlated_ratio_sample(np.array([[2.0, 0.0], [0.0, 2.0]]), 50, 5, 5, seed=0)


class TestRepresentationDistance:
    @staticmethod
    def _batch(values, n, k, seed=0):
        return OSBatch(values=values, n=n, k=(k, k), convention="n-k", seed=seed)

    def test_identical_inputs_give_zero(self):
        rv = correlated_ratio_sample(np.eye(2), 100, 9, 500, seed=11)
        batch = self._batch(rv.ratios, 100, 9)
        assert representation_distance(batch, rv) == 0.0

    def test_same_law_below_dkw_band(self):
        # two independent samples from one law stay within the DKW-style bound
        n, k, r = 400, 20, 10**4
        a = correlated_ratio_sample(np.eye(2), n, k, r, seed=12)
        b = correlated_ratio_sample(np.eye(2), n, k, r, seed=13)
        dist = representation_distance(self._batch(a.ratios, n, k), b)
        delta = 1e-3
        assert dist <= 4.0 * math.sqrt(math.log(2.0 / delta) / (2.0 * r))

    def test_detects_distribution_shift(self):
        n, k, r = 400, 20, 4000
        a = correlated_ratio_sample(np.eye(2), n, k, r, seed=14)
        shifted = self._batch(a.ratios * 0.98, n, k)
        assert representation_distance(shifted, a) > 0.1

    def test_metadata_mismatch_rejected(self):
        rv = correlated_ratio_sample(np.eye(2), 100, 9, 50, seed=15)
        with pytest.raises(ValueError):
            representation_distance(self._batch(rv.ratios, 100, 8), rv)
        with pytest.raises(ValueError):
            representation_distance(self._batch(rv.ratios, 101, 9), rv)

    def test_ecdf_on_grid_matches_direct_count(self):
        rng = np.random.default_rng(3)
        values = rng.random((500, 2))
        grid = quantile_grid([values])
        ecdf = ecdf_on_grid(values, grid)
        i, j = 2, 6
        direct = np.mean((values[:, 0] <= grid[0][i]) & (values[:, 1] <= grid[1][j]))
        assert ecdf[i, j] == direct
