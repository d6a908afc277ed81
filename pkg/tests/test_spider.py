import csv
import math

import numpy as np
import pytest
from scipy import stats

from spider_linnik import spider_sim as sp
from spider_linnik.identities.engine import ks_critical
from spider_linnik.rng import RandomSource
from spider_linnik.samplers import ParameterError


def ks2(x, y):
    return stats.ks_2samp(x, y).statistic <= ks_critical(0.01, len(x), len(y))


def test_config_validation():
    with pytest.raises(ParameterError):
        sp.SpiderConfig.of((0.5, 0.5), steps=999)
    with pytest.raises(ParameterError):
        sp.SpiderConfig(3, (0.5, 0.5))
    with pytest.raises(ParameterError):
        sp.SpiderConfig.of((0.5, 0.6))
    with pytest.raises(ParameterError):
        sp.SpiderConfig.of((1.0,), local_time_scale=0.0)


def test_psi():
    assert sp.psi(4.0) == 2.0


def test_occupation_counts_sum_to_steps():
    cfg = sp.SpiderConfig.of((0.2, 0.3, 0.5), steps=2000)
    s = sp.simulate_spider(cfg, RandomSource(1), 300)
    assert np.all(s.occupation.sum(axis=1) == cfg.steps)
    np.testing.assert_allclose(s.time.sum(axis=1), cfg.steps)
    assert np.all(s.occupation >= 0) and np.all(s.time >= 0)
    assert np.all(s.excursions.sum(axis=1) == s.zero_visits)


def test_single_ray():
    cfg = sp.SpiderConfig.of((1.0,), steps=1000)
    s = sp.simulate_spider(cfg, RandomSource(2), 50)
    assert np.all(s.occupation[:, 0] == 1000)
    np.testing.assert_allclose(s.fractions, 1.0)


def test_end_state_consistent():
    cfg = sp.SpiderConfig.of((0.5, 0.5), steps=1000)
    s = sp.simulate_spider(cfg, RandomSource(3), 500)
    assert np.all((s.end_ray == sp.AT_ORIGIN) == (s.end_distance == 0))
    assert np.all(s.end_distance % 2 == 0)  # even number of steps


def test_local_time_when_walk_never_returns():
    cfg = sp.SpiderConfig.of((0.5, 0.5), steps=1000)
    s = sp.simulate_spider(cfg, RandomSource(4), 2000)
    lonely = s.zero_visits == 1
    assert lonely.any()
    assert np.all(sp.local_time(s, cfg)[lonely] <= cfg.local_time_scale / math.sqrt(cfg.steps))


def test_calibration_constant():
    cfg = sp.SpiderConfig.of((0.5, 0.5), steps=1000)
    c = sp.calibrate_local_time_scale(cfg, 20_000, RandomSource(5))
    assert c.z_against(math.sqrt(2)) < 3.0


def test_martingale_check():
    cfg = sp.SpiderConfig.of((0.7, 0.3), steps=1000)
    assert sp.verify_martingale(cfg, 20_000, RandomSource(6)).passed


def test_bridges_end_at_origin():
    cfg = sp.SpiderConfig.of((0.5, 0.5), steps=1000)
    for method in ("exchangeable", "rejection"):
        b = sp.simulate_bridge(cfg, RandomSource(7), 200, method=method)
        assert len(b) == 200 and np.all(b.end_distance == 0)
        assert np.all(b.end_ray == sp.AT_ORIGIN)


def test_bridge_methods_agree():
    cfg = sp.SpiderConfig.of((0.5, 0.5), steps=1000)
    a = sp.simulate_bridge(cfg, RandomSource(8), 2000, method="exchangeable").fractions[:, 0]
    b = sp.simulate_bridge(cfg, RandomSource(9), 2000, method="rejection").fractions[:, 0]
    assert ks2(a, b)


def test_bridge_cap():
    cfg = sp.SpiderConfig.of((0.5, 0.5), steps=10_000)
    with pytest.raises(sp.BridgeCapError, match="reduce steps"):
        sp.simulate_bridge(cfg, RandomSource(10), 10, method="rejection", cap=1, fallback=False)
    b = sp.simulate_bridge(cfg, RandomSource(10), 10, method="rejection", cap=1)
    assert np.all(b.end_distance == 0)


def test_bridge_validation():
    with pytest.raises(ParameterError):
        sp.simulate_bridge(sp.SpiderConfig.of((1.0,), steps=1001), RandomSource(1), 1)
    with pytest.raises(ParameterError):
        sp.simulate_bridge(sp.SpiderConfig.of((1.0,), steps=1000), RandomSource(1), 1,
                           method="teleport")


def test_csv_export(tmp_path):
    cfg = sp.SpiderConfig.of((0.5, 0.5), steps=1000)
    s = sp.simulate_spider(cfg, RandomSource(11), 20)
    path = tmp_path / "paths.csv"
    s.to_csv(path)
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 20
    assert list(rows[0]) == ["occupation_0", "occupation_1", "zero_visits", "end_ray",
                             "end_distance", "steps"]
    for row, occ, ray in zip(rows, s.occupation, s.end_ray):
        assert int(row["occupation_0"]) + int(row["occupation_1"]) == 1000
        assert int(row["occupation_0"]) == occ[0]
        assert row["end_ray"] == ("origin" if ray == sp.AT_ORIGIN else str(ray))


def test_reproducible_across_runs():
    cfg = sp.SpiderConfig.of((0.5, 0.5), steps=1000)
    a = sp.simulate_spider(cfg, RandomSource(12), 1200)
    b = sp.simulate_spider(cfg, RandomSource(12), 1200)
    np.testing.assert_array_equal(a.occupation, b.occupation)
    np.testing.assert_array_equal(a.zero_visits, b.zero_visits)


def test_diffusive_scaling():
    short = sp.simulate_spider(sp.SpiderConfig.of((0.6, 0.4), steps=1000), RandomSource(13), 5000)
    long = sp.simulate_spider(sp.SpiderConfig.of((0.6, 0.4), steps=2000), RandomSource(14), 5000)
    assert ks2(short.fractions[:, 0], long.fractions[:, 0])


def test_permutation_of_rays():
    a = sp.simulate_spider(sp.SpiderConfig.of((0.75, 0.25), steps=1000), RandomSource(15), 5000)
    b = sp.simulate_spider(sp.SpiderConfig.of((0.25, 0.75), steps=1000), RandomSource(16), 5000)
    assert ks2(a.fractions[:, 0], b.fractions[:, 1])
    assert ks2(a.fractions[:, 1], b.fractions[:, 0])


def test_rank_bins_equal_mass():
    x = np.repeat([0.0, 1.0, 2.0], [50, 30, 20])
    labels = sp.rank_bins(x, 4, np.random.default_rng(0))
    assert np.all(np.bincount(labels) == 25)
    assert labels[x == 0.0].max() <= labels[x == 1.0].min()
    assert labels[x == 1.0].max() <= labels[x == 2.0].min()


def test_killed_walk_lengths():
    cfg = sp.SpiderConfig.of((0.5, 0.5), steps=1000)
    s = sp.simulate_killed(cfg, 2.0, 5000, RandomSource(17))
    mean_time = s.steps.mean() / cfg.steps
    assert mean_time == pytest.approx(0.5, rel=0.05)
    assert np.all(s.time_before_last_zero.sum(axis=1) <= s.steps)
    with pytest.raises(ParameterError):
        sp.simulate_killed(cfg, 0.0, 10, RandomSource(1))


def test_lemma51_trivial_lambda():
    cfg = sp.SpiderConfig.of((0.5, 0.5), steps=1000)
    rep = sp.verify_lemma51(cfg, 1.0, (0.0, 0.0), 5000, RandomSource(18))
    cond = rep.subtests[0]
    assert cond.details["passing_mass"] == 1.0
    assert all(row["mean_diff"] == 0.0 for row in cond.details["bins"])


def test_lemma51_bad_lambda():
    cfg = sp.SpiderConfig.of((0.5, 0.5), steps=1000)
    with pytest.raises(ParameterError):
        sp.verify_lemma51(cfg, 1.0, (1.0,), 100, RandomSource(1))


def test_lemma51_skewed():
    cfg = sp.SpiderConfig.of((0.75, 0.25), steps=2000)
    rep = sp.verify_lemma51(cfg, 1.0, (0.5, 2.0), 20_000, RandomSource(19))
    assert rep.passed, rep.subtests[0].details["bins"]


def test_bridge_weighted_small():
    cfg = sp.SpiderConfig.of((0.75, 0.25), steps=2000)
    assert sp.verify_bridge_weighted(cfg, 5000, RandomSource(20), n_ref=50_000).passed
