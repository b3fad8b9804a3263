import math

import numpy as np
import pytest

from matrixbs.density import Convention, logpdf_T, logpdf_uni_gbs
from matrixbs.errors import DegenerateDataWarning, DomainError, NegativeDiffError
from matrixbs.fit import (
    DEFAULT_S_GRID,
    EvidenceGrade,
    FitSpec,
    bic_star,
    evidence_grade,
    fit_mle,
    init_guess,
    loglik,
    outside_support,
    profile_s_grid,
)
from matrixbs.kernels import gaussian_kernel, kotz_kernel
from matrixbs.sampling import sample_batch
from matrixbs.transform import GbsParams


XI_TRUE = np.array([[1.0, 0.3], [0.3, 0.8]])


def make_batch(count, seed, xi=XI_TRUE, beta=100.0, n=6, kernel=None):
    params = GbsParams(n=n, xi=xi, beta=beta * np.eye(xi.shape[0]))
    kernel = kernel or gaussian_kernel(n, xi.shape[0])
    return sample_batch(params, kernel, count, seed)


class TestLoglik:
    def test_single_scalar_observation_is_univariate(self):
        kernel = gaussian_kernel(1, 1)
        # below and above the scale: the n = m = 1 law covers all of t > 0
        for t in (0.4, 2.7):
            value = loglik(np.array([[[t]]]), 1, 1.9, np.array([[0.7]]), kernel)
            assert value == pytest.approx(logpdf_uni_gbs(t, 0.7, 1.9, kernel),
                                          abs=1e-12)

    @pytest.mark.parametrize("family", ["gaussian", "kotz"])
    def test_matches_density_sum(self, family):
        batch = make_batch(20, 91)
        beta_v, xi_v = 95.0, np.array([[1.1, 0.25], [0.25, 0.9]])
        if family == "gaussian":
            kernel = gaussian_kernel(6, 2)
        else:
            kernel = kotz_kernel(1.8, 0.7, 1.3, 6, 2)
        params = GbsParams(n=6, xi=xi_v, beta=beta_v * np.eye(2))
        expected = sum(logpdf_T(T, params, kernel, Convention.AS_PUBLISHED)
                       for T in batch.matrices)
        value = loglik(batch, 6, beta_v, xi_v, kernel)
        assert value == pytest.approx(expected, abs=1e-8)

    def test_gaussian_equals_unit_kotz(self):
        batch = make_batch(15, 3)
        xi_v = np.array([[0.9, 0.2], [0.2, 1.2]])
        a = loglik(batch, 6, 90.0, xi_v, gaussian_kernel(6, 2))
        b = loglik(batch, 6, 90.0, xi_v, kotz_kernel(1.0, 0.5, 1.0, 6, 2))
        assert a == pytest.approx(b, abs=1e-8)

    def test_outside_support_is_minus_inf(self):
        batch = make_batch(10, 17)
        lam_min = np.linalg.eigvalsh(batch.matrices).min()
        assert loglik(batch, 6, lam_min * 1.01, XI_TRUE, gaussian_kernel(6, 2)) == -math.inf
        assert outside_support(batch, lam_min * 1.01)
        assert outside_support(batch, lam_min * 0.5) == []

    def test_convention_shift_is_constant(self):
        batch = make_batch(12, 23)
        xi_v = np.array([[1.0, 0.1], [0.1, 0.9]])
        a = loglik(batch, 6, 80.0, xi_v, gaussian_kernel(6, 2),
                   Convention.AS_PUBLISHED)
        b = loglik(batch, 6, 80.0, xi_v, gaussian_kernel(6, 2),
                   Convention.BRANCH_NORMALIZED)
        assert b - a == pytest.approx(12 * 2 * math.log(2.0), abs=1e-10)


class TestInitGuess:
    def test_univariate_moment_estimators(self, rng):
        # m=1: reduces to beta = sqrt(am*hm), alpha = sqrt(2 (sqrt(am/hm) - 1))
        t = rng.uniform(0.5, 4.0, size=(30, 1, 1))
        guess = init_guess(t, 2)
        am = t[:, 0, 0].mean()
        hm = 1.0 / np.mean(1.0 / t[:, 0, 0])
        assert guess.beta0 == pytest.approx(math.sqrt(am * hm), rel=1e-12)
        assert guess.xi0[0, 0] == pytest.approx(
            math.sqrt(2.0 * (math.sqrt(am / hm) - 1.0)), rel=1e-9)

    def test_constant_data_falls_back(self):
        t = np.repeat(3.0 * np.eye(2)[None, :, :], 5, axis=0)
        with pytest.warns(DegenerateDataWarning):
            guess = init_guess(t, 6)
        assert guess.beta0 == pytest.approx(3.0, rel=1e-12)
        assert guess.xi0[0, 0] >= 0.5 - 1e-9  # fallback alpha, possibly floored

    def test_beta_within_factor_two(self):
        # moment seed works in the small-shape regime
        hits = 0
        for seed in range(20):
            batch = make_batch(40, 500 + seed, xi=0.3 * XI_TRUE)
            guess = init_guess(batch, 6)
            if 50.0 <= guess.beta0 <= 200.0:
                hits += 1
        assert hits == 20

    def test_spd_floor(self, rng):
        batch = make_batch(10, 77)
        guess = init_guess(batch, 6)
        assert np.linalg.eigvalsh(guess.xi0).min() >= 1e-3 - 1e-12

    def test_needs_two_observations(self):
        with pytest.raises(DomainError):
            init_guess(np.eye(2)[None, :, :], 6)


class TestFitMle:
    def test_gaussian_recovery(self):
        batch = make_batch(200, 20260810)
        res = fit_mle(batch, FitSpec(family="gaussian", seed=1), 6)
        assert res.converged
        assert abs(res.beta - 100.0) / 100.0 < 0.05
        assert np.abs((res.xi - XI_TRUE) / XI_TRUE).max() < 0.15
        assert res.n_params == 4
        assert res.n_support_violations == 0

    def test_refit_from_optimum_is_stable(self):
        batch = make_batch(40, 55)
        res = fit_mle(batch, FitSpec(family="gaussian", seed=2), 6)
        warm = {"beta": res.beta, "xi": res.xi}
        res2 = fit_mle(batch, FitSpec(family="gaussian", seed=3, warm_start=warm), 6)
        assert abs(res2.loglik_max - res.loglik_max) < 1e-6

    def test_kotz_nests_gaussian(self):
        batch = make_batch(20, 7)
        g = fit_mle(batch, FitSpec(family="gaussian", seed=0), 6)
        k = fit_mle(batch, FitSpec(family="kotz", s=1.0, seed=0,
                                   warm_start={"beta": g.beta, "xi": g.xi,
                                               "r": 0.5, "q": 1.0}), 6)
        assert k.loglik_max >= g.loglik_max - 1e-6
        assert k.n_params == 6

    def test_convention_invariance_of_fit(self):
        batch = make_batch(16, 77)
        const = batch.count * batch.m * math.log(2.0)
        results = {}
        for conv in (Convention.AS_PUBLISHED, Convention.BRANCH_NORMALIZED):
            g = fit_mle(batch, FitSpec(family="gaussian", seed=4, convention=conv), 6)
            k = fit_mle(batch, FitSpec(family="kotz", s=1.0, seed=4, convention=conv,
                                       warm_start={"beta": g.beta, "xi": g.xi,
                                                   "r": 0.5, "q": 1.0}), 6)
            results[conv] = (g, k)
        g_a, k_a = results[Convention.AS_PUBLISHED]
        g_b, k_b = results[Convention.BRANCH_NORMALIZED]
        assert g_b.loglik_max - g_a.loglik_max == pytest.approx(const, abs=1e-4)
        assert g_b.beta == pytest.approx(g_a.beta, rel=1e-5)
        assert np.allclose(g_b.xi, g_a.xi, rtol=1e-4, atol=1e-6)
        # model-comparison differences are unchanged by the convention
        diff_a = k_a.bic_star - g_a.bic_star
        diff_b = k_b.bic_star - g_b.bic_star
        assert diff_b == pytest.approx(diff_a, abs=1e-3)


class TestBicStar:
    def test_zero(self):
        assert bic_star(0.0, 0, 20) == 0.0

    def test_sample_size_twenty_factor(self):
        # per-parameter penalty ln(22) - ln(24)
        factor = math.log(22.0) - math.log(24.0)
        assert factor == pytest.approx(-0.08701, abs=5e-6)
        assert bic_star(0.0, 3, 20) == pytest.approx(3 * factor, abs=1e-12)

    def test_affine_in_arguments(self):
        assert (bic_star(-10.0, 4, 20) - bic_star(0.0, 4, 20)) == pytest.approx(20.0)
        assert (bic_star(0.0, 5, 20) - bic_star(0.0, 4, 20)) == pytest.approx(
            math.log(22.0) - math.log(24.0))

    def test_domain(self):
        with pytest.raises(DomainError):
            bic_star(0.0, 1, 0)


class TestEvidenceGrade:
    @pytest.mark.parametrize("diff,expected", [
        (1.0, EvidenceGrade.WEAK),
        (4.0, EvidenceGrade.POSITIVE),
        (8.0, EvidenceGrade.STRONG),
        (11.31758, EvidenceGrade.VERY_STRONG),   # grading fixture
        (12.05738, EvidenceGrade.VERY_STRONG),
        (15.66898, EvidenceGrade.VERY_STRONG),
        (16.81938, EvidenceGrade.VERY_STRONG),
        (13.85258, EvidenceGrade.VERY_STRONG),
        (0.0, EvidenceGrade.WEAK),
        (2.0, EvidenceGrade.POSITIVE),
        (6.0, EvidenceGrade.STRONG),
        (10.0, EvidenceGrade.VERY_STRONG),
    ])
    def test_grades(self, diff, expected):
        assert evidence_grade(diff) is expected

    def test_monotone(self):
        order = [EvidenceGrade.WEAK, EvidenceGrade.POSITIVE, EvidenceGrade.STRONG,
                 EvidenceGrade.VERY_STRONG]
        grades = [order.index(evidence_grade(d)) for d in np.linspace(0.0, 15.0, 151)]
        assert grades == sorted(grades)

    def test_negative_rejected(self):
        with pytest.raises(NegativeDiffError):
            evidence_grade(-0.5)


class TestProfileGrid:
    def test_default_grid_shape(self):
        assert len(DEFAULT_S_GRID) == 10

    def test_table_layout(self):
        batch = make_batch(20, 11)
        profile = profile_s_grid(batch, (0.5, 1.0, 2.0), 6,
                                 spec=FitSpec(restarts=3, seed=0))
        assert profile.column_names() == (
            "s", "beta", "alpha11", "alpha12", "alpha22", "r", "q", "bic_diff")
        assert len(profile.rows) == 3
        for row in profile.rows:
            values = profile.row_values(row)
            assert len(values) == 8
            assert values[0] == row.s

    def test_gaussian_data_mostly_weak(self):
        # on Gaussian-generated data the Kotz gain should be modest
        diffs = []
        for seed in range(20):
            batch = make_batch(20, 900 + seed)
            profile = profile_s_grid(batch, (1.0,), 6,
                                     spec=FitSpec(restarts=2, seed=seed))
            diffs.append(abs(profile.rows[0].bic_diff))
        assert np.median(diffs) < 10.0

    def test_kotz_data_detected(self):
        kernel = kotz_kernel(22.0, 7.5, 1.0, 6, 2)
        wins = 0
        for seed in range(20):
            batch = make_batch(20, 1000 + seed, kernel=kernel)
            profile = profile_s_grid(batch, (1.0,), 6,
                                     spec=FitSpec(restarts=2, seed=seed))
            row = profile.rows[0]
            # positive difference means the Kotz row beats the baseline
            if (profile.baseline.bic_star - row.fit.bic_star) > 6.0:
                wins += 1
        assert wins >= 16

    def test_parallel_jobs_match_serial(self):
        batch = make_batch(14, 3)
        serial = profile_s_grid(batch, (0.75, 1.5), 6,
                                spec=FitSpec(restarts=2, seed=5))
        parallel = profile_s_grid(batch, (0.75, 1.5), 6,
                                  spec=FitSpec(restarts=2, seed=5), jobs=2)
        for a, b in zip(serial.rows, parallel.rows):
            assert a.fit.loglik_max == pytest.approx(b.fit.loglik_max, abs=1e-12)
            assert a.bic_diff == pytest.approx(b.bic_diff, abs=1e-12)

    def test_bad_grid(self):
        batch = make_batch(5, 1)
        with pytest.raises(DomainError):
            profile_s_grid(batch, (0.5, -1.0), 6)
