import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import ndtr
from scipy.stats import poisson

from barnesgff.errors import InversionError
from barnesgff.numerics import (
    SeriesCoeffs,
    TabulatedCDF,
    exp_series,
    integrate_interval,
    integrate_line,
    integrate_semiline,
    invert_cf_to_cdf,
    kolmogorov_distance,
    series_product,
    sobol_uniforms,
)


def test_semiline_exponential():
    r = integrate_semiline(lambda t: np.exp(-t))
    assert abs(r.value - 1) <= 1e-12
    assert r.error_estimate >= 0 and r.evaluations >= 1


def test_semiline_gamma2():
    assert abs(integrate_semiline(lambda t: t * np.exp(-t)).value - 1) <= 1e-12


def test_semiline_frullani():
    # int e^{-2t}(1 - e^{-t})/t dt = log(3/2)
    r = integrate_semiline(lambda t: np.exp(-2 * t) * -np.expm1(-t) / t)
    assert abs(r.value - math.log(1.5)) <= 1e-10


def test_semiline_series_fallback_near_zero():
    # ((1 - e^{-t})/t) e^{-t}; the expression cancels catastrophically near 0
    K = 24
    g = np.array([(-1.0) ** k / math.factorial(k + 1) for k in range(K + 1)])
    ser = series_product([SeriesCoeffs(g), exp_series(-1.0, K)], K)
    ser = SeriesCoeffs(ser.coefficients, radius_hint=1.0)
    calls = []

    def f(t):
        calls.append(np.min(t))
        return (1 - np.exp(-t)) / t * np.exp(-t)

    r = integrate_semiline(f, series=ser)
    assert abs(r.value - math.log(2)) <= 1e-12
    assert min(calls) > 2.0**-6


def test_interval_and_line():
    assert abs(integrate_interval(np.cos, 0.0, math.pi / 2).value - 1) <= 1e-12
    r = integrate_line(lambda x: np.exp(-0.5 * x**2), center=0.3)
    assert abs(r.value - math.sqrt(2 * math.pi)) <= 1e-10


@given(
    st.floats(-3, 3),
    st.floats(-3, 3),
    st.floats(0.2, 5),
    st.floats(0.2, 5),
)
def test_semiline_linearity(alpha, beta, c1, c2):
    f = lambda t: np.exp(-c1 * t)  # noqa: E731
    g = lambda t: t * np.exp(-c2 * t)  # noqa: E731
    lhs = integrate_semiline(lambda t: alpha * f(t) + beta * g(t)).value
    rhs = alpha * integrate_semiline(f).value + beta * integrate_semiline(g).value
    assert abs(lhs - rhs) <= 10 * 1e-10 * max(1.0, abs(lhs))


def test_series_product_examples():
    one_t = SeriesCoeffs(np.array([1.0, 1.0, 0.0]))
    assert np.allclose(series_product([one_t, one_t], 2).coefficients, [1, 2, 1], atol=0)
    e_pos = exp_series(1.0, 5)
    e_neg = exp_series(-1.0, 5)
    assert np.allclose(series_product([e_pos, e_neg], 5).coefficients, [1, 0, 0, 0, 0, 0], atol=1e-15)
    assert np.array_equal(series_product([], 3).coefficients, [1, 0, 0, 0])


def test_bernoulli_generating_series():
    from barnesgff.multigamma import bernoulli_coefficients

    c = bernoulli_coefficients((1, (1.0,)), 2)
    assert np.allclose(c, [1, 0.5, 1 / 12], rtol=0, atol=1e-15)


coeff = st.lists(st.floats(-2, 2), min_size=17, max_size=17)


@given(coeff, coeff, coeff)
def test_series_product_assoc_comm(a, b, c):
    A, B, C = (SeriesCoeffs(np.array(x)) for x in (a, b, c))
    K = 16
    ab_c = series_product([series_product([A, B], K), C], K).coefficients
    a_bc = series_product([A, series_product([B, C], K)], K).coefficients
    ba = series_product([B, A], K).coefficients
    ab = series_product([A, B], K).coefficients
    scale = 1 + np.abs(ab_c).max()
    assert np.max(np.abs(ab_c - a_bc)) <= 1e-12 * scale
    assert np.max(np.abs(ab - ba)) <= 1e-13 * (1 + np.abs(ab).max())


def test_series_eval_horner():
    s = SeriesCoeffs(np.array([1.0, 2.0, 3.0]))
    assert s(2.0) == 1 + 4 + 12
    assert s.order == 2


def test_invert_normal():
    grid = np.linspace(-4, 4, 41)
    tab = invert_cf_to_cdf(lambda u: np.exp(-0.5 * u**2), grid)
    assert np.max(np.abs(tab.cdf - ndtr(grid))) <= 1e-6
    assert tab.max_repair <= 1e-4


def test_invert_poisson_lattice():
    lam = 2.0
    grid = np.arange(0, 9) + 0.5
    tab = invert_cf_to_cdf(lambda u: np.exp(lam * np.expm1(1j * u)), grid, damping=0.1)
    assert np.max(np.abs(tab.cdf - poisson.cdf(np.arange(0, 9), lam))) <= 1e-5


def test_invert_exponential():
    # the CDF has a kink at 0; check away from it
    grid = np.concatenate([np.linspace(-2, -0.25, 8), np.linspace(0.25, 8, 32)])
    tab = invert_cf_to_cdf(lambda u: 1 / (1 - 1j * u), grid)
    exact = np.where(grid > 0, -np.expm1(-np.maximum(grid, 0)), 0.0)
    assert np.max(np.abs(tab.cdf - exact)) <= 1e-6


def test_invert_refuses_non_decaying():
    with pytest.raises(InversionError):
        invert_cf_to_cdf(np.cos, np.linspace(-2, 2, 9))


def test_invert_round_trip():
    grid = np.linspace(-6, 6, 601)
    tab = invert_cf_to_cdf(lambda u: np.exp(-0.5 * u**2 + 0.3j * u), grid)
    rng = np.random.default_rng(1)
    n = 20000
    x = tab.quantile(rng.uniform(size=n))
    y = rng.normal(0.3, 1.0, size=n)
    assert kolmogorov_distance(x, y) <= 3 / math.sqrt(n) + 1.36 * math.sqrt(2 / n) + 0.02


def test_tabulated_cdf_validation():
    with pytest.raises(ValueError):
        TabulatedCDF(np.array([0.0, 1.0]), np.array([0.6, 0.5]))
    with pytest.raises(ValueError):
        TabulatedCDF(np.array([1.0, 0.0]), np.array([0.1, 0.5]))


def test_sobol_reproducible():
    a = sobol_uniforms(100, 3, 7)
    b = sobol_uniforms(100, 3, 7)
    assert a.shape == (128, 3)
    assert np.array_equal(a, b)
    assert np.all((a > 0) & (a < 1))
    assert not np.array_equal(a, sobol_uniforms(100, 3, 8))


def test_kolmogorov_distance_bounds():
    x = np.arange(10.0)
    assert kolmogorov_distance(x, x) == 0
    assert kolmogorov_distance(x, x + 100) == 1
