import itertools
import math

import numpy as np
import pytest
from scipy import stats

from src.distributions import (
    METHOD_SLOTS,
    GigParams,
    IgParams,
    RngStream,
    draw_dirichlet,
    draw_double_exponential,
    draw_gamma,
    draw_gig,
    draw_inverse_gaussian,
    draw_log_gamma,
    draw_normal,
    gig_log_pdf,
    gig_mean,
)
from src.errors import DomainError
from tests.oracles import gig_chisquare_pvalue


class TestRngStream:
    def test_same_key_same_draws(self):
        a = RngStream(7, 3).generator.random(5)
        b = RngStream(7, 3).generator.random(5)
        np.testing.assert_array_equal(a, b)

    def test_stream_ids_are_independent(self):
        a = RngStream(7, 0).generator.random(5)
        b = RngStream(7, 1).generator.random(5)
        assert not np.array_equal(a, b)

    def test_replicate_stream_ids(self):
        stream = RngStream.for_replicate(11, replicate=4, method_index=2)
        assert stream.seed == 11
        assert stream.stream_id == 4 * METHOD_SLOTS + 2

    @pytest.mark.parametrize('seed', [-1, 2 ** 64, 1.5])
    def test_invalid_seed(self, seed):
        with pytest.raises(DomainError):
            RngStream(seed)

    def test_method_index_out_of_range(self):
        with pytest.raises(DomainError):
            RngStream.for_replicate(1, 0, METHOD_SLOTS)


class TestNormal:
    def test_moments(self, rng):
        draws = draw_normal(rng, 0.0, 2.0, 1_000_000)
        assert abs(draws.mean()) < 4 * 2.0 / math.sqrt(draws.size)
        assert draws.var() == pytest.approx(4.0, rel=0.05)

    def test_vanishing_sd_returns_the_mean(self, rng):
        assert abs(draw_normal(rng, 3.25, 1e-12) - 3.25) < 1e-9

    @pytest.mark.parametrize('sd', [0.0, -1.0, float('nan')])
    def test_rejects_nonpositive_sd(self, rng, sd):
        with pytest.raises(DomainError):
            draw_normal(rng, 0.0, sd)


class TestDoubleExponential:
    def test_symmetric(self):
        draws = draw_double_exponential(RngStream(21), 1.0, 100_000)
        assert abs(np.mean(draws > 0) - 0.5) < 3 * math.sqrt(0.25 / draws.size)

    def test_moments(self):
        scale = 2.5
        draws = draw_double_exponential(RngStream(22), scale, 400_000)
        magnitude = np.abs(draws)
        assert abs(magnitude.mean() - scale) < 4 * magnitude.std() / math.sqrt(draws.size)
        assert draws.var() == pytest.approx(2 * scale ** 2, rel=0.03)

    def test_rejects_nonpositive_scale(self, rng):
        with pytest.raises(DomainError):
            draw_double_exponential(rng, 0.0)


def test_gamma_rate_convention(rng):
    draws = draw_gamma(rng, 3.0, 2.0, 100_000)
    assert draws.mean() == pytest.approx(1.5, abs=0.02)


def test_gamma_rejects_bad_parameters(rng):
    with pytest.raises(DomainError):
        draw_gamma(rng, 0.0, 1.0)
    with pytest.raises(DomainError):
        draw_gamma(rng, 1.0, -2.0)


def test_log_gamma_small_shape(rng):
    shape = 1e-3
    log_draws = draw_log_gamma(rng, shape, 100_000)
    assert np.all(np.isfinite(log_draws))
    # mean and sd of Gamma(a, 1) are a and sqrt(a); 5 standard errors
    assert np.exp(log_draws).mean() == pytest.approx(shape, abs=5 * math.sqrt(shape / 100_000))


def test_log_gamma_keeps_values_that_underflow(rng):
    log_draws = draw_log_gamma(rng, 1e-4, 10_000)
    assert np.all(np.isfinite(log_draws))
    assert log_draws.min() < -745.0


def test_log_gamma_large_shape_matches_gamma(rng):
    log_draws = draw_log_gamma(rng, 4.0, 50_000)
    assert stats.kstest(np.exp(log_draws), stats.gamma(4.0).cdf).pvalue > 1e-3


class TestDirichlet:
    def test_single_coordinate(self, rng):
        np.testing.assert_array_equal(draw_dirichlet(rng, 0.3, 1), [1.0])

    def test_simplex_for_tiny_concentration(self, rng):
        phi = draw_dirichlet(rng, 1e-4, 1000)
        assert np.all(phi >= 0)
        assert np.all(np.isfinite(phi))
        assert abs(phi.sum() - 1.0) < 1e-12

    def test_marginal_is_beta(self, rng):
        first = np.array([draw_dirichlet(rng, 0.5, 4)[0] for _ in range(20_000)])
        assert stats.kstest(first, stats.beta(0.5, 1.5).cdf).pvalue > 1e-3

    def test_bad_dimension(self, rng):
        with pytest.raises(DomainError):
            draw_dirichlet(rng, 0.5, 0)


class TestInverseGaussian:
    def test_matches_scipy(self, rng):
        mu, lam = 2.0, 3.0
        draws = draw_inverse_gaussian(rng, IgParams(mu, lam), 100_000)
        reference = stats.invgauss(mu / lam, scale=lam)
        assert stats.kstest(draws, reference.cdf).pvalue > 1e-3

    def test_large_mean_to_shape_ratio(self, rng):
        draws = draw_inverse_gaussian(rng, IgParams(1e6, 1.0), 10_000)
        assert np.all(draws > 0)
        assert np.all(np.isfinite(draws))

    def test_broadcasts_over_means(self, rng):
        draws = draw_inverse_gaussian(rng, IgParams(np.array([0.5, 1.0, 4.0]), 1.0))
        assert draws.shape == (3,)

    @pytest.mark.parametrize('mu, lam', [(0.0, 1.0), (1.0, 0.0), (np.inf, 1.0)])
    def test_invalid_parameters(self, rng, mu, lam):
        with pytest.raises(DomainError):
            draw_inverse_gaussian(rng, IgParams(mu, lam))


class TestGigParams:
    def test_rho_must_be_positive(self):
        with pytest.raises(DomainError):
            GigParams(0.5, 0.0, 1.0).validate()

    def test_chi_must_be_nonnegative(self):
        with pytest.raises(DomainError):
            GigParams(0.5, 1.0, -1.0).validate()

    def test_zero_chi_needs_positive_lambda(self):
        with pytest.raises(DomainError):
            GigParams(-0.5, 1.0, 0.0).validate()
        GigParams(0.5, 1.0, 0.0).validate()

    def test_inverse_gaussian_as_gig(self):
        params = IgParams(mu=2.0, lam=3.0).as_gig()
        assert params.lam == -0.5
        assert params.rho == pytest.approx(0.75)
        assert params.chi == pytest.approx(3.0)


@pytest.mark.parametrize('lam, rho, chi', [(-0.99, 1.0, 1e-6), (0.5, 2.0, 1.0), (2.5, 0.5, 25.0), (0.0, 1.0, 2.0)])
def test_gig_log_pdf_matches_scipy(lam, rho, chi):
    y = np.array([1e-7, 1e-3, 0.1, 1.0, 7.5, 40.0])
    reference = stats.geninvgauss.logpdf(y, lam, math.sqrt(rho * chi), scale=math.sqrt(chi / rho))
    np.testing.assert_allclose(gig_log_pdf(y, GigParams(lam, rho, chi)), reference, rtol=1e-8, atol=1e-8)


def test_gig_log_pdf_gamma_limit():
    y = np.array([0.1, 1.0, 3.0])
    expected = stats.gamma.logpdf(y, 1.5, scale=2.0 / 3.0)
    np.testing.assert_allclose(gig_log_pdf(y, GigParams(1.5, 3.0, 0.0)), expected, rtol=1e-12)


GIG_GRID = list(itertools.product([-0.99, 0.5, 2.5], [0.5, 1.0, 4.0], [1e-6, 1.0, 25.0]))


@pytest.mark.parametrize('lam, rho, chi', GIG_GRID)
def test_gig_sampler_goodness_of_fit(lam, rho, chi):
    params = GigParams(lam, rho, chi)
    reference = draw_gig(RngStream(1), params, 100_000)
    draws = draw_gig(RngStream(2), params, 100_000)
    assert np.all(draws > 0)
    assert gig_chisquare_pvalue(draws, reference, params, bins=50) > 1e-3


def test_gig_zero_chi_is_gamma(rng):
    draws = draw_gig(rng, GigParams(2.0, 0.5, 0.0), 100_000)
    assert draws.mean() == pytest.approx(4.0, rel=0.02)


def test_gig_half_order_matches_inverse_gaussian():
    mu, lam = 1.7, 2.3
    via_gig = draw_gig(RngStream(3), IgParams(mu, lam).as_gig(), 200_000)
    direct = draw_inverse_gaussian(RngStream(4), IgParams(mu, lam), 200_000)
    assert stats.ks_2samp(via_gig, direct).statistic < 0.01


def test_gig_mean_matches_draws(rng):
    params = GigParams(-1.5, 1.0, 3.0)
    draws = draw_gig(rng, params, 200_000)
    assert draws.mean() == pytest.approx(gig_mean(params), rel=0.02)


def test_gig_mean_near_the_pole():
    params = GigParams(-0.9, 1.0, 0.02)
    draws = draw_gig(RngStream(8), params, 200_000)
    se = draws.std() / math.sqrt(draws.size)
    assert abs(draws.mean() - gig_mean(params)) < 3 * se


def test_gig_vector_parameters(rng):
    chi = np.array([1e-6, 0.1, 10.0])
    draws = draw_gig(rng, GigParams(-0.7, 1.0, chi))
    assert draws.shape == (3,)
    assert np.all(draws > 0)


def test_gig_scalar_draw_is_float(rng):
    assert isinstance(draw_gig(rng, GigParams(0.3, 1.0, 1.0)), float)
