"""Tests for Chebyshev interpolation and the CDF post-processing."""

import math

import numpy as np
import pytest
from scipy.stats import norm

from rmtdist.chebapprox import (
    ChebInterpolant,
    bary_eval,
    cheb_fit,
    definite_integral,
    derivative,
    interpolate,
    moments,
    numerical_support,
    quantile,
)
from rmtdist.errors import (
    BadBracketError,
    NoConvergenceError,
    NotACdfError,
    OutOfDomainError,
)
from rmtdist.quadrature import Interval


def normal_cdf(x):
    return 0.5 * (1.0 + np.vectorize(math.erf)(np.asarray(x) / math.sqrt(2.0)))


def gamma2_cdf(x):
    # Gamma(shape 2, rate 1): mean 2, variance 2, skewness sqrt(2), excess kurtosis 3
    x = np.asarray(x, dtype=float)
    return 1.0 - np.exp(-x) * (1.0 + x)


class TestChebInterpolant:
    def test_rejects_degree_zero(self):
        with pytest.raises(ValueError):
            ChebInterpolant(interval=Interval(0.0, 1.0), samples=np.ones(1), degree=0)

    def test_rejects_sample_count_mismatch(self):
        with pytest.raises(ValueError):
            ChebInterpolant(interval=Interval(0.0, 1.0), samples=np.ones(3), degree=4)

    def test_samples_read_only(self):
        p = interpolate(np.sin, Interval(0.0, 1.0), 8)
        with pytest.raises(ValueError):
            p.samples[0] = 7.0


class TestBaryEval:
    def test_reproduces_linear_function(self):
        p = interpolate(lambda x: x, Interval(-1.0, 1.0), 4)
        assert abs(bary_eval(p, 0.3) - 0.3) < 1e-15

    def test_node_hit_returns_stored_sample(self):
        p = interpolate(np.sin, Interval(-2.0, 3.0), 9)
        for k, x in enumerate(p.nodes):
            assert bary_eval(p, float(x)) == p.samples[k]

    def test_exponential_grid_error(self):
        p = interpolate(np.exp, Interval(0.0, 1.0), 20)
        grid = np.linspace(0.0, 1.0, 501)
        assert np.max(np.abs(bary_eval(p, grid) - np.exp(grid))) < 1e-14

    def test_polynomial_reproduction(self):
        poly = lambda x: 2.0 * x**5 - x**3 + 0.25 * x - 3.0
        p = interpolate(poly, Interval(-0.5, 2.0), 7)
        grid = np.linspace(-0.5, 2.0, 101)
        assert np.max(np.abs(bary_eval(p, grid) - poly(grid))) < 1e-12

    def test_outside_interval_raises(self):
        p = interpolate(np.exp, Interval(0.0, 1.0), 8)
        with pytest.raises(OutOfDomainError):
            bary_eval(p, 1.5)
        with pytest.raises(OutOfDomainError):
            bary_eval(p, np.array([0.5, -0.1]))


class TestChebFit:
    def test_constant_collapses_to_minimal_degree(self):
        p = cheb_fit(lambda x: 4.25, Interval(-3.0, 5.0), 1e-12)
        assert p.degree == 1
        assert abs(bary_eval(p, 1.234) - 4.25) < 1e-14

    def test_smooth_function_matches_direct_evaluation(self):
        p = cheb_fit(np.exp, Interval(-2.0, 2.0), 1e-12)
        rng = np.random.default_rng(7)
        pts = rng.uniform(-2.0, 2.0, 100)
        assert np.max(np.abs(bary_eval(p, pts) - np.exp(pts))) < 1e-11

    def test_runge_function_converges(self):
        f = lambda x: 1.0 / (1.0 + 25.0 * x**2)
        p = cheb_fit(f, Interval(-1.0, 1.0), 1e-10)
        grid = np.linspace(-1.0, 1.0, 301)
        assert np.max(np.abs(bary_eval(p, grid) - f(grid))) < 1e-8

    def test_non_smooth_function_raises(self):
        with pytest.raises(NoConvergenceError):
            cheb_fit(np.abs, Interval(-1.0, 1.0), 1e-12)

    def test_deterministic(self):
        f = lambda x: np.sin(3.0 * x) * np.exp(-x)
        p1 = cheb_fit(f, Interval(0.0, 4.0), 1e-12)
        p2 = cheb_fit(f, Interval(0.0, 4.0), 1e-12)
        assert p1.degree == p2.degree
        assert np.array_equal(p1.samples, p2.samples)

    def test_rejects_bad_tolerance(self):
        with pytest.raises(ValueError):
            cheb_fit(np.exp, Interval(0.0, 1.0), 0.0)


class TestSpectralCalculus:
    def test_derivative_of_sine(self):
        p = cheb_fit(np.sin, Interval(0.0, math.pi), 1e-13)
        dp = derivative(p)
        grid = np.linspace(0.0, math.pi, 201)
        assert np.max(np.abs(bary_eval(dp, grid) - np.cos(grid))) < 1e-12

    def test_integral_of_polynomial_is_exact(self):
        poly = lambda x: x**3 - 2.0 * x + 1.0
        p = interpolate(poly, Interval(-0.5, 2.0), 9)
        want = (2.0**4 / 4 - 4.0 + 2.0) - ((-0.5) ** 4 / 4 - 0.25 - 0.5)
        assert abs(definite_integral(p) - want) < 1e-14

    def test_integral_of_exponential(self):
        p = cheb_fit(np.exp, Interval(0.0, 1.0), 1e-13)
        assert abs(definite_integral(p) - (math.e - 1.0)) < 1e-14


class TestMoments:
    def test_standard_normal(self):
        p = cheb_fit(normal_cdf, Interval(-10.0, 10.0), 1e-13)
        mean, var, skew, kurt = moments(p)
        assert abs(mean.value) < 1e-12
        assert abs(var.value - 1.0) < 1e-11
        assert abs(skew.value) < 1e-12
        assert abs(kurt.value) < 1e-9
        assert mean.err < 1e-10 and var.err < 1e-9

    def test_gamma_shape_two(self):
        p = cheb_fit(gamma2_cdf, Interval(0.0, 60.0), 1e-13)
        mean, var, skew, kurt = moments(p)
        assert abs(mean.value - 2.0) < 1e-10
        assert abs(var.value - 2.0) < 1e-9
        assert abs(skew.value - math.sqrt(2.0)) < 1e-8
        assert abs(kurt.value - 3.0) < 1e-7

    def test_affine_equivariance(self):
        base = cheb_fit(normal_cdf, Interval(-10.0, 10.0), 1e-13)
        mu, sigma = 3.0, 0.5
        shifted = cheb_fit(
            lambda s: normal_cdf((s - mu) / sigma),
            Interval(mu - 10.0 * sigma, mu + 10.0 * sigma),
            1e-13,
        )
        b = moments(base)
        t = moments(shifted)
        assert abs(t[0].value - (mu + sigma * b[0].value)) < 1e-10
        assert abs(t[1].value - sigma**2 * b[1].value) < 1e-10
        assert abs(t[2].value - b[2].value) < 1e-10
        assert abs(t[3].value - b[3].value) < 1e-10

    def test_affine_equivariance_skewed_wide_interval(self):
        # the gamma tail forces a fit interval ~20 sigma wide, where the
        # fourth t-moment is conditioned at (width/sigma)^4 ~ 1e5 ulps;
        # the agreement bound scales accordingly
        base = cheb_fit(gamma2_cdf, Interval(0.0, 60.0), 1e-14)
        mu, sigma = 3.0, 0.5
        shifted = cheb_fit(
            lambda s: gamma2_cdf((s - mu) / sigma),
            Interval(mu, mu + 60.0 * sigma),
            1e-14,
        )
        b = moments(base)
        t = moments(shifted)
        assert abs(t[0].value - (mu + sigma * b[0].value)) < 1e-10
        assert abs(t[1].value - sigma**2 * b[1].value) < 1e-10
        assert abs(t[2].value - b[2].value) < 1e-9
        assert abs(t[3].value - b[3].value) < 3e-9

    def test_rejects_non_cdf_inputs(self):
        with pytest.raises(NotACdfError):
            moments(cheb_fit(np.sin, Interval(0.0, math.pi), 1e-12))
        with pytest.raises(NotACdfError):
            moments(cheb_fit(lambda x: 1.0 - normal_cdf(x), Interval(-10.0, 10.0), 1e-12))
        with pytest.raises(NotACdfError):
            moments(cheb_fit(lambda x: 0.5 * normal_cdf(x), Interval(-10.0, 10.0), 1e-12))


class TestQuantile:
    def test_identity_cdf(self):
        assert abs(quantile(lambda s: s, 0.5, Interval(0.0, 1.0)) - 0.5) < 1e-12

    def test_normal_quantiles(self):
        for prob in (0.05, 0.5, 0.975):
            got = quantile(lambda s: float(normal_cdf(s)), prob, Interval(-8.0, 8.0))
            assert abs(got - norm.ppf(prob)) < 1e-11

    def test_bad_bracket_raises(self):
        with pytest.raises(BadBracketError):
            quantile(lambda s: float(normal_cdf(s)), 0.5, Interval(1.0, 5.0))

    def test_rejects_bad_probability(self):
        with pytest.raises(ValueError):
            quantile(lambda s: s, 1.5, Interval(0.0, 1.0))


class TestNumericalSupport:
    def test_normal_cdf_support(self):
        sup = numerical_support(
            lambda s: float(normal_cdf(s)), Interval(-1.0, 1.0), 1e-10
        )
        assert float(normal_cdf(sup.lo)) <= 1e-10
        assert float(normal_cdf(sup.hi)) >= 1.0 - 1e-10
        assert -9.0 < sup.lo < -6.0
        assert 6.0 < sup.hi < 9.0

    def test_rejects_bad_tolerance(self):
        with pytest.raises(ValueError):
            numerical_support(lambda s: s, Interval(0.0, 1.0), -1.0)
