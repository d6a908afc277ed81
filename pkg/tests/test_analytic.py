import math

import numpy as np
import pytest
from scipy import integrate, special, stats

from spider_linnik.analytic import (HTable, LevyQuery, conditional_density_tprime, h_alpha_t,
                                    h_moment, lamperti_cdf, lamperti_density, lamperti_quantile,
                                    levy_density, levy_exponent_check, levy_integral,
                                    linnik_exponent, linnik_laplace, stable_cdf, stable_density,
                                    stable_density_mass, tilted_exponent)
from spider_linnik.rng import RandomSource
from spider_linnik.samplers import EXAMPLE1, EXAMPLE2, LinnikSpec, ParameterError, sample_stable


def half_stable_density(s):
    return (2 * math.sqrt(math.pi)) ** -1 * s ** -1.5 * math.exp(-1 / (4 * s))


@pytest.mark.parametrize("args,value", [((0.5, 0.0, 4.0), 2.0), ((0.5, 1.0, 3.0), 1.0),
                                        ((0.3, 2.0, 0.0), 0.0)])
def test_tilted_exponent_values(args, value):
    assert tilted_exponent(*args) == pytest.approx(value, abs=1e-15)


def test_tilted_exponent_increasing_concave():
    lam = np.linspace(0, 10, 101)
    v = tilted_exponent(0.4, 0.7, lam)
    assert np.all(np.diff(v) > 0) and np.all(np.diff(v, 2) < 0)


def test_linnik_laplace_examples():
    assert linnik_laplace(EXAMPLE1, 1.0) == pytest.approx(math.sqrt(2) - 1, rel=1e-14)
    assert linnik_laplace(EXAMPLE2, 1.0) == pytest.approx(2 / (1 + math.sqrt(2)), rel=1e-14)
    for t in (0.5, 2.0):
        lam = 0.7
        assert linnik_laplace(EXAMPLE1.with_t(t), lam) == pytest.approx(
            (math.sqrt(1 + lam) - math.sqrt(lam)) ** t, rel=1e-13)
        assert linnik_laplace(EXAMPLE2.with_t(t), lam) == pytest.approx(
            2 ** t / (1 + math.sqrt(1 + lam)) ** t, rel=1e-13)
    assert linnik_laplace(LinnikSpec(0.3, (1, 2, 3), (1, 0, 2), 1.5), 0.0) == 1.0


def test_linnik_laplace_negative_lambda():
    with pytest.raises(ParameterError):
        linnik_laplace(EXAMPLE1, -0.1)


def test_linnik_laplace_log_convex():
    spec = LinnikSpec(0.6, (1.0, 0.5), (0.3, 1.0), 1.3)
    lam = np.linspace(0, 8, 81)
    v = np.log(linnik_laplace(spec, lam))
    assert v[0] == 0.0
    assert np.all(np.diff(v) < 0) and np.all(np.diff(v, 2) > -1e-12)


def test_stable_density_half_closed_form():
    assert stable_density(0.5, 1.0) == pytest.approx(math.exp(-0.25) / (2 * math.sqrt(math.pi)),
                                                     abs=1e-10)
    for s in (0.05, 0.25, 4.0, 50.0):
        assert stable_density(0.5, s) == pytest.approx(half_stable_density(s), abs=1e-9)


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.7])
def test_stable_density_mass(alpha):
    assert stable_density_mass(alpha) == pytest.approx(1.0, abs=1e-5)


def test_stable_cdf_half():
    # T = 1/(4 gamma_{1/2}) gives P(T <= s) = erfc(1/(2 sqrt s))
    for s in (0.1, 1.0, 10.0):
        assert stable_cdf(0.5, s) == pytest.approx(special.erfc(0.5 / math.sqrt(s)), abs=1e-9)


def test_stable_density_vs_histogram(src):
    x = sample_stable(0.7, src, 4_000_000)
    width = 0.02
    est = np.mean(np.abs(x - 0.5) < width / 2) / width
    assert est == pytest.approx(stable_density(0.7, 0.5), rel=0.02)


def test_stable_density_domain():
    with pytest.raises(ParameterError):
        stable_density(0.5, 0.0)


def test_lamperti_value_and_symmetry():
    assert lamperti_density(0.5, 1.0) == pytest.approx(1 / (2 * math.pi), rel=1e-15)
    r = np.logspace(-3, 3, 13)
    for alpha in (0.3, 0.5, 0.8):
        np.testing.assert_allclose(lamperti_density(alpha, r),
                                   r ** -2 * lamperti_density(alpha, 1 / r), rtol=1e-12)


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.7])
def test_lamperti_normalization(alpha):
    def f(y):
        return math.exp(y) * lamperti_density(alpha, math.exp(y))
    mass = sum(integrate.quad(f, a, b, epsabs=1e-13, epsrel=1e-12, limit=400)[0]
               for a, b in ((-150.0, 0.0), (0.0, 150.0)))
    assert mass == pytest.approx(1.0, abs=1e-8)


def test_lamperti_cdf_quantile_inverse():
    v = np.linspace(0.05, 0.95, 10)
    np.testing.assert_allclose(lamperti_cdf(0.4, lamperti_quantile(0.4, v)), v, atol=1e-13)


def test_conditional_density_normalization():
    mass, _ = integrate.quad(lambda y: math.exp(y) * conditional_density_tprime(0.5, math.exp(y), 1.0),
                             -8, 12, limit=200)
    assert mass == pytest.approx(1.0, abs=1e-5)


def test_conditional_density_consistency():
    for r in (0.3, 1.0, 3.0):
        s = np.array([0.2, 1.0, 5.0])
        lhs = conditional_density_tprime(0.5, s, r) * lamperti_density(0.5, r)
        rhs = np.array([si * half_stable_density(r * si) * half_stable_density(si) for si in s])
        np.testing.assert_allclose(lhs, rhs, rtol=1e-7)


def test_conditional_density_vs_pair_binning(src):
    gen = src.generator
    t = sample_stable(0.5, gen, 4_000_000)
    tp = sample_stable(0.5, gen, 4_000_000)
    keep = np.abs(np.log(t / tp)) < 0.02
    cond = tp[keep]
    y = np.linspace(-7, 11, 700)
    dens = conditional_density_tprime(0.5, np.exp(y), 1.0) * np.exp(y)
    cdf = integrate.cumulative_trapezoid(dens, y, initial=0.0)
    deciles = np.quantile(cond, np.linspace(0.1, 0.9, 9))
    model = np.interp(np.log(deciles), y, cdf)
    assert np.max(np.abs(model - np.linspace(0.1, 0.9, 9))) < 0.03


@pytest.mark.parametrize("alpha,t", [(0.5, 1.0), (0.3, 2.0), (0.7, 0.5)])
def test_h_moment_identity(alpha, t):
    target = special.gamma(t + 1) / special.gamma(alpha * t + 1)
    assert h_moment(alpha, t) == pytest.approx(target, abs=1e-4)


def test_h_moment_value_half():
    assert h_moment(0.5, 1.0) == pytest.approx(2 / math.sqrt(math.pi), abs=1e-4)


def test_h_at_t_zero():
    np.testing.assert_allclose(h_alpha_t(0.5, 0.0, np.array([0.1, 1.0, 10.0])), 1.0, rtol=1e-6)
    assert h_moment(0.5, 0.0) == pytest.approx(1.0, abs=1e-6)


def test_h_positive_on_grid():
    r = np.logspace(-3, 3, 25)
    assert np.all(h_alpha_t(0.6, 1.0, r) > 0)


def test_h_table_interpolates():
    table = HTable.build(0.5, 1.0, y_max=10.0, points=81)
    r = np.array([0.05, 0.7, 3.0])
    np.testing.assert_allclose(table(r), h_alpha_t(0.5, 1.0, r), rtol=1e-5)


def beta_half_expectation(fn):
    return integrate.quad(lambda b: fn(b) * stats.beta(0.5, 0.5).pdf(b), 0, 1, limit=200)[0]


def test_levy_density_example1():
    oracle = beta_half_expectation(lambda b: math.exp(-b))
    assert oracle == pytest.approx(0.64503, abs=1e-5)
    assert oracle == pytest.approx(math.exp(-0.5) * special.i0(0.5), rel=1e-10)
    assert levy_density(LevyQuery(EXAMPLE1, 1.0)).mean == pytest.approx(0.5 * oracle, abs=1e-8)


def test_levy_density_example2():
    oracle = beta_half_expectation(lambda b: math.exp(-1 / b))
    for x in (0.3, 1.0, 2.5):
        want = 0.5 / x * beta_half_expectation(lambda b: math.exp(-x / b))
        assert levy_density(LevyQuery(EXAMPLE2, x)).mean == pytest.approx(want, abs=1e-8)
    assert levy_density(LevyQuery(EXAMPLE2, 1.0)).mean == pytest.approx(0.5 * oracle, abs=1e-8)


def test_levy_density_small_x():
    # E[G] is infinite here, so 1 - E[exp(-x G)] decays only like x**alpha
    gaps = [abs(x * levy_density(LevyQuery(EXAMPLE2, x)).mean - 0.5)
            for x in (1e-6, 1e-10, 1e-14)]
    assert gaps[0] > gaps[1] > gaps[2] and gaps[2] < 1e-5
    # P(1/R > y) ~ (2/pi) y**-0.5 gives the leading term sqrt(x / pi)
    np.testing.assert_allclose(gaps, np.sqrt(np.array([1e-6, 1e-10, 1e-14]) / math.pi), rtol=2e-3)
    x = 1e-8
    assert x * levy_density(LevyQuery(EXAMPLE1, x)).mean == pytest.approx(0.5, rel=1e-7)


def test_levy_density_montecarlo_degenerate():
    spec = LinnikSpec(0.5, (1.0, 1.0, 1.0), (1 / 9, 1 / 9, 1 / 9), 1.0)
    est = levy_density(LevyQuery(spec, 2.0, mc_n=20_000), RandomSource(1))
    assert est.mean == pytest.approx(0.25 * math.exp(-2 / 9), rel=1e-12)


def test_levy_density_montecarlo_matches_quadrature():
    # a third coordinate with mu = nu = 0 contributes nothing to G
    spec3 = LinnikSpec(0.5, (0.25, 0.0, 0.0), (0.25, 0.25, 0.0), 1.0)
    est = levy_density(LevyQuery(spec3, 1.0, mc_n=400_000), RandomSource(2))
    quad = levy_density(LevyQuery(EXAMPLE2, 1.0)).mean
    assert abs(est.mean - quad) < 3 * est.std_error


def test_levy_integral_of_bump():
    # int x e^{-x} levy(x) dx = alpha E[1/(1+G)^1] for N = 1 when G = nu/mu
    spec = LinnikSpec(0.5, (1.0,), (1.0,), 1.0)
    val = levy_integral(spec, lambda x: x * math.exp(-x), 1e-12, 60.0)
    assert val == pytest.approx(0.25, abs=1e-8)


def test_levy_exponent_examples():
    lhs, rhs = levy_exponent_check(EXAMPLE2, 1.0)
    assert rhs == pytest.approx(math.log(1 + (math.sqrt(2) - 1) / 2), rel=1e-14)
    assert rhs == pytest.approx(0.18823, abs=1e-5)
    assert abs(lhs.mean - rhs) <= 3 * lhs.std_error + 1e-12
    lhs, rhs = levy_exponent_check(EXAMPLE1, 2.0)
    assert abs(lhs.mean - rhs) <= 3 * lhs.std_error + 1e-12
    lhs, rhs = levy_exponent_check(EXAMPLE1, 0.0)
    assert (lhs.mean, rhs) == (0.0, 0.0)


def test_levy_exponent_montecarlo():
    spec = LinnikSpec(0.5, (1.0, 0.5, 0.0), (1 / 9, 1 / 9, 1 / 9), 1.0)
    for lam in (0.5, 2.0):
        lhs, rhs = levy_exponent_check(spec, lam, RandomSource(3), mc_n=200_000)
        assert lhs.z_against(rhs) < 3.0


def test_levy_requires_sigma_one():
    spec = LinnikSpec(0.5, (1.0, 1.0), (1.0, 1.0), 1.0)
    with pytest.raises(ParameterError, match="sum"):
        levy_density(LevyQuery(spec, 1.0))
    with pytest.raises(ParameterError):
        levy_exponent_check(spec, 1.0)


def test_levy_query_validation():
    with pytest.raises(ParameterError):
        LevyQuery(EXAMPLE2, 1.0, mc_n=9_999)
    with pytest.raises(ParameterError):
        LevyQuery(EXAMPLE2, 0.0)


def test_linnik_exponent_matches_laplace():
    spec = LinnikSpec(0.4, (1.0, 2.0), (0.5, 0.1), 2.5)
    assert math.exp(-spec.t * linnik_exponent(spec, 1.7)) == pytest.approx(
        linnik_laplace(spec, 1.7), rel=1e-14)
