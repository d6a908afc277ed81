import math

import numpy as np
import pytest
from scipy import special

from spider_linnik.estimates import MCEstimate, TestReport, WeightedSample
from spider_linnik.identities import catalog
from spider_linnik.identities.engine import (ConfigurationError, compare_estimates, holm,
                                             lt_band, require_ess, vector_battery, weighted_ks)
from spider_linnik.rng import RandomSource, set_threads
from spider_linnik.samplers import EXAMPLE1, EXAMPLE2, LinnikSpec, ParameterError


# engine ---------------------------------------------------------------------

def test_weighted_ks_identical_inputs():
    x = WeightedSample.unit(np.random.default_rng(0).random(1000))
    stat, thr = weighted_ks(x, x)
    assert stat == 0.0 and thr > 0


def test_weighted_ks_calibration():
    gen = np.random.default_rng(2024)
    passes = 0
    for rep in range(100):
        a = WeightedSample.unit(gen.random(10_000))
        b = WeightedSample.unit(gen.random(10_000))
        stat, thr = weighted_ks(a, b, rng=rep)
        passes += stat <= thr
    assert passes >= 95


def test_weighted_ks_power():
    gen = np.random.default_rng(7)
    a = WeightedSample.unit(gen.random(10_000))
    b = WeightedSample.unit(gen.random(10_000) + 0.1)
    stat, thr = weighted_ks(a, b)
    assert stat > thr


def test_weighted_ks_uses_weights():
    # Exp(1) reweighted by e^{-x} is Exp(2)
    gen = np.random.default_rng(3)
    x = gen.exponential(1.0, 50_000)
    a = WeightedSample(x, np.exp(-x))
    b = WeightedSample.unit(gen.exponential(0.5, 50_000))
    stat, thr = weighted_ks(a, b)
    assert stat <= thr
    stat, thr = weighted_ks(WeightedSample.unit(x), b)
    assert stat > thr


def test_weighted_sample_validation():
    with pytest.raises(ValueError):
        WeightedSample(np.ones(3), np.array([1.0, 0.0, 1.0]))
    with pytest.raises(ValueError):
        WeightedSample(np.ones(3), np.array([1.0, np.inf, 1.0]))
    with pytest.raises(ValueError):
        WeightedSample(np.ones(3), np.ones(2))


def test_weighted_estimate_matches_unweighted():
    x = np.random.default_rng(1).random(1000)
    a = MCEstimate.from_samples(x)
    b = MCEstimate.from_weighted(x, np.full(x.size, 3.0))
    assert a.mean == pytest.approx(b.mean)
    assert b.std_error == pytest.approx(a.std_error, rel=1e-2)


def test_pool_is_order_independent():
    gen = np.random.default_rng(4)
    parts = [MCEstimate.from_samples(gen.random(s)) for s in (100, 250, 400)]
    a = MCEstimate.pool(parts)
    b = MCEstimate.pool(parts[::-1])
    assert a.mean == pytest.approx(b.mean, rel=1e-15) and a.n == 750


def test_lt_band_point_mass():
    rep = lt_band(WeightedSample.unit(np.zeros(100)), (0.5, 1.0, 2.0), lambda lam: 1.0)
    assert rep.passed and rep.statistic == 0.0


def test_lt_band_gamma_one():
    x = WeightedSample.unit(np.random.default_rng(5).exponential(1.0, 100_000))
    rep = lt_band(x, (0.25, 0.5, 1.0, 2.0, 4.0), lambda lam: 1.0 / (1.0 + lam))
    assert rep.passed


def test_lt_band_detects_wrong_law():
    x = WeightedSample.unit(np.random.default_rng(5).exponential(1.0, 100_000))
    assert not lt_band(x, (1.0,), lambda lam: 1.0 / (1.0 + 1.1 * lam)).passed


def test_holm():
    assert holm([0.001, 0.2, 0.004], level=0.01) == [True, False, True]
    assert holm([0.006, 0.007], level=0.01) == [False, False]
    assert holm([0.004, 0.006], level=0.01) == [True, True]


def test_compare_estimates_bias_allowance():
    pairs = [("a", MCEstimate(1.04, 0.001, 10), 1.0)]
    assert not compare_estimates("x", pairs, 10, 0).passed
    assert compare_estimates("x", pairs, 10, 0, bias_allowance=0.05).passed


def test_require_ess_floor():
    w = np.ones(1000)
    w[0] = 1e9
    with pytest.raises(ConfigurationError, match="effective sample size"):
        require_ess(WeightedSample(np.zeros(1000), w), 1000, "test")
    assert require_ess(WeightedSample.unit(np.zeros(1000)), 1000, "test") == 1000


def test_report_json_roundtrip():
    rep = TestReport.combine("c", [TestReport("a", 1.0, 2.0, 5, 1), TestReport("b", 3.0, 2.0, 5, 1)],
                             5, 1)
    d = rep.to_dict()
    assert d["schema"] == 1 and d["pass"] is False and d["statistic"] == 1.5
    assert [r["identity_id"] for r in rep.rows()] == ["c/a", "c/b"]


def test_vector_battery_fixed():
    assert len(vector_battery(2)) == 7
    assert all(v.shape == (3,) for v in vector_battery(3))


# gamma-time tilted vector and the weighted stable representation ------------------

def test_theorem2_mass_and_battery():
    rep = catalog.verify_theorem2(0.5, (0.25, 0.25), 1.0, 1.0, 200_000, RandomSource(1))
    assert rep.passed, rep.details
    mass = rep.details["battery"][0]
    assert mass["label"] == "mass" and abs(mass["lhs"] - 1) < 3 * mass["lhs_se"]


def test_theorem2_lhs_matches_closed_form():
    # F = exp(-x1 - x2), g = 1: the LHS is the Laplace transform of C1 + C2
    spec = LinnikSpec(0.5, (1.0, 1.0), (0.25, 0.25), 1.0)
    comps, _ = catalog._linnik_draws(0.5, spec.nu, 1.0, 400_000, RandomSource(2))
    est = MCEstimate.from_samples(np.exp(-comps.sum(axis=1)))
    from spider_linnik.analytic import linnik_laplace
    assert est.z_against(linnik_laplace(spec, 1.0)) < 3.0


def test_theorem2_general_m():
    rep = catalog.verify_theorem2(0.5, (1.0, 0.0), 1.0, 2.0, 200_000, RandomSource(3))
    assert rep.passed, rep.details


def test_theorem2_m1_matches_minimal_implementation():
    # direct transcription of the sigma = 1, m = 1 representation:
    # E[F(C(gamma_t))] = Gamma(1+at)/Gamma(1+t) E[F(gamma_at T/(nu.T)) (nu.T)^(-at)]
    alpha, nu, t, n = 0.5, np.array([0.25, 0.25]), 1.5, 300_000
    gen = np.random.default_rng(11)
    from spider_linnik.samplers import sample_stable
    tv = sample_stable(alpha, gen, (n, 2))
    g = gen.gamma(alpha * t, 1.0, n)
    s = tv @ nu
    c = special.gamma(1 + alpha * t) / special.gamma(1 + t)
    lam = np.array([0.5, 2.0])
    direct = MCEstimate.from_samples(c * s ** (-alpha * t) * np.exp(-(g / s)[:, None] * tv @ lam))
    tv2, y, w = catalog.theorem2_rhs(alpha, nu, t, 1.0, n, RandomSource(12))
    coded = MCEstimate.from_samples(w * np.exp(-y[:, None] * tv2 @ lam))
    assert direct.z_against(coded) < 3.0


def test_theorem2_degenerate_weights():
    with pytest.raises(ConfigurationError, match="sigma"):
        catalog.theorem2_rhs(0.5, (1.0, 1.0), 20.0, 1.0, 20_000, RandomSource(1))


def test_theorem2_bad_m():
    with pytest.raises(ParameterError):
        catalog.verify_theorem2(0.5, (0.25, 0.25), 1.0, 0.0, 1000, RandomSource(1))


def test_corollary1():
    rep = catalog.verify_corollary1(0.5, (0.25, 0.25), 2.0, 100_000, RandomSource(4))
    assert rep.passed
    names = [s.identity_id for s in rep.subtests]
    assert names[0] == "gamma_law" and sum(n.startswith("indep") for n in names) == 4


def test_corollary1_requires_sigma_one():
    with pytest.raises(ParameterError):
        catalog.verify_corollary1(0.5, (1.0, 1.0), 1.0, 1000, RandomSource(1))


def test_reports_deterministic():
    a = catalog.verify_corollary1(0.5, (0.25, 0.25), 1.0, 20_000, RandomSource(9)).to_dict()
    b = catalog.verify_corollary1(0.5, (0.25, 0.25), 1.0, 20_000, RandomSource(9)).to_dict()
    assert a == b


def test_reports_thread_independent():
    set_threads(1)
    a = catalog.verify_linnik_laplace(EXAMPLE1, 600_000, RandomSource(9)).to_dict()
    set_threads(3)
    b = catalog.verify_linnik_laplace(EXAMPLE1, 600_000, RandomSource(9)).to_dict()
    assert a == b


def test_label_permutation_symmetry():
    nu = (0.36, 0.16)
    a = catalog.verify_corollary1(0.5, nu, 1.0, 50_000, RandomSource(5))
    b = catalog.verify_corollary1(0.5, nu[::-1], 1.0, 50_000, RandomSource(6))
    assert a.passed == b.passed is True
    spec = LinnikSpec(0.5, (0.25, 0.0), (0.25, 0.25), 1.0)
    swapped = LinnikSpec(0.5, (0.0, 0.25), (0.25, 0.25), 1.0)
    a = catalog.verify_linnik_laplace(spec, 200_000, RandomSource(7))
    b = catalog.verify_linnik_laplace(swapped, 200_000, RandomSource(8))
    assert a.passed and b.passed


# marginals ---------------------------------------------------------------------

@pytest.mark.parametrize("eid", [1, 2])
def test_prop_marginals_exact(eid):
    assert catalog.verify_prop_marginals(eid, t=1.0, n=50_000, rng=RandomSource(eid)).passed


def test_prop_marginals_equal_mu():
    # mu1 = mu2 = 1 and nu = (1/4, 1/4): the ratio factor is identically 4
    rhs = catalog.gamma_ratio_rhs((1.0, 1.0), (0.25, 0.25), 1.0, 1000, RandomSource(1))
    gen = RandomSource(1).substream(0).generator
    assert np.allclose(rhs.values, 4.0 * gen.gamma(0.5, 1.0, 1000))
    rep = catalog.verify_prop_marginals(3, {"mu": (1.0, 1.0)}, 1.0, 50_000, RandomSource(2))
    assert rep.passed and rep.details["ess"] > 500


def test_prop_marginals_general_alpha():
    rep = catalog.verify_prop_marginals("general_alpha", {}, 1.0, 100_000, RandomSource(3))
    assert rep.passed, [s.summary_line() for s in rep.subtests]
    assert rep.details["C_t_estimate"] == pytest.approx(rep.details["C_t_exact"], rel=0.05)


def test_prop_marginals_unknown():
    with pytest.raises(ParameterError):
        catalog.verify_prop_marginals(7, n=10, rng=RandomSource(1))


# Levy measure ------------------------------------------------------------------

def test_bump_support():
    x = np.array([0.0, 0.15, 0.5, 0.85, 1.0])
    b = catalog.bump(x, 0.5, 0.4)
    assert b[0] == 0 and b[-1] == 0 and b[2] == 1.0 and np.all(b[1:4] > 0)


def test_levy_limit_single_coordinate():
    spec = LinnikSpec(0.5, (1.0,), (1.0,), 1.0)
    rep = catalog.verify_levy_limit(spec, 0.01, 300_000, RandomSource(4), n_rhs=50_000)
    assert rep.passed, rep.details["battery"]


def test_levy_limit_example2():
    rep = catalog.verify_levy_limit(EXAMPLE2, 0.01, 300_000, RandomSource(5), n_rhs=50_000)
    assert rep.passed, rep.details["battery"]


def test_levy_exponent_three_coordinates():
    spec = LinnikSpec(0.5, (1.0, 0.5, 0.25), (1 / 9, 1 / 9, 1 / 9), 1.0)
    assert catalog.verify_levy_exponent(spec, rng=RandomSource(6), mc_n=100_000).passed


# bridge representation ------------------------------------------------------------

def test_bridge_normalization_candidates():
    diag = catalog.bridge_normalization(0.5, (0.5, 0.5), 200_000, RandomSource(1))
    assert diag["exponent_alpha"]["is_probability"]
    assert not diag["exponent_one"]["is_probability"]
    # at alpha = 1/2 the exponent-one weight has mean Gamma(3/2) E[1/S]
    assert diag["exponent_one"]["mean"] > 1.5


def test_bridge_weight_mean_one_other_alpha():
    rep = catalog.verify_bridge_normalization(0.3, (0.2, 0.3, 0.5), 200_000, RandomSource(2))
    assert rep.passed


def test_section4_default_and_alternative():
    good = catalog.verify_section4(0.5, (0.5, 0.5), 50_000, RandomSource(3))
    assert good.passed, [s.summary_line() for s in good.subtests]
    bad = catalog.verify_section4(0.5, (0.5, 0.5), 50_000, RandomSource(3), bridge_exponent=1.0)
    assert not bad.passed


def test_section4_bad_probabilities():
    with pytest.raises(ParameterError):
        catalog.verify_section4(0.5, (0.5, 0.6), 100, RandomSource(1))


# deterministic checks -----------------------------------------------------------------

def test_kanter_density_report():
    rep = catalog.verify_kanter_density(alphas=(0.5,))
    assert rep.passed and rep.seed == 0


def test_h_moment_report():
    rep = catalog.verify_h_moment(alphas=(0.5,), ts=(1.0,))
    assert rep.passed
    assert rep.subtests[0].details["exact"] == pytest.approx(2 / math.sqrt(math.pi))
