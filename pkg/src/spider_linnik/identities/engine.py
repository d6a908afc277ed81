"""Weighted two-sample comparisons and Laplace-transform batteries."""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np
from scipy import special, stats

from ..estimates import MCEstimate, TestReport, WeightedSample
from ..rng import RandomSource, as_generator

LEVEL = 0.01
Z_THRESHOLD = 3.0
BOOTSTRAP_RESAMPLES = 200
ESS_FLOOR = 0.01

# Fixed functional batteries; bump BATTERY_VERSION whenever these change.
BATTERY_VERSION = 1
LAMBDA_GRID = (0.25, 0.5, 1.0, 2.0, 4.0)
SHORT_LAMBDA_GRID = (0.5, 1.0, 2.0)
KAPPA_GRID = (0.0, 1.0)


class ConfigurationError(ValueError):
    """An identity test was configured so that its estimator is unusable."""


def vector_battery(dim: int) -> list[np.ndarray]:
    """Laplace vectors for ``F(x) = exp(-lam . x)``: coordinate and diagonal probes."""
    out = []
    for scale in (0.5, 2.0):
        for i in range(dim):
            v = np.zeros(dim)
            v[i] = scale
            out.append(v)
    for scale in (0.5, 1.0, 2.0):
        out.append(np.full(dim, scale))
    return out


def weighted_ks(a: WeightedSample, b: WeightedSample, level: float = LEVEL,
                resamples: int = BOOTSTRAP_RESAMPLES,
                rng: RandomSource | np.random.Generator | int | None = 0):
    """Sup distance between self-normalized weighted ECDFs and its null threshold.

    The threshold is the ``1 - level`` quantile of the bootstrap distribution of
    ``sup |(F*_a - F_a) - (F*_b - F_b)|``, resampling each side (with its
    weights) independently. Returns ``(statistic, threshold)``.
    """
    gen = as_generator(rng)
    xa, wa = _sorted(a)
    xb, wb = _sorted(b)
    grid = np.concatenate([xa, xb])
    pos_a = np.searchsorted(xa, grid, side="right")
    pos_b = np.searchsorted(xb, grid, side="right")

    def cdf(w, pos):
        cw = np.concatenate(([0.0], np.cumsum(w)))
        return cw[pos] / cw[-1]

    fa = cdf(wa, pos_a)
    fb = cdf(wb, pos_b)
    statistic = float(np.max(np.abs(fa - fb))) if grid.size else 0.0
    boot = np.empty(resamples)
    for k in range(resamples):
        ca = np.bincount(gen.integers(0, xa.size, xa.size), minlength=xa.size)
        cb = np.bincount(gen.integers(0, xb.size, xb.size), minlength=xb.size)
        da = cdf(ca * wa, pos_a) - fa
        db = cdf(cb * wb, pos_b) - fb
        boot[k] = np.max(np.abs(da - db))
    threshold = float(np.quantile(boot, 1.0 - level))
    return statistic, threshold


def _sorted(s: WeightedSample):
    x = np.asarray(s.values, dtype=float)
    if x.ndim != 1:
        raise ValueError("weighted_ks compares one-dimensional samples")
    order = np.argsort(x, kind="stable")
    return x[order], s.weights[order]


def weighted_ks_report(identity_id: str, a: WeightedSample, b: WeightedSample,
                       seed: int = 0, level: float = LEVEL, **params) -> TestReport:
    stat, thr = weighted_ks(a, b, level, rng=seed)
    return TestReport(identity_id, stat, thr, min(len(a), len(b)), seed, params,
                      {"ess_a": a.ess, "ess_b": b.ess, "level": level})


def ks_critical(level: float, n: int, m: int | None = None) -> float:
    """Asymptotic Kolmogorov critical value (one- or two-sample)."""
    c = float(special.kolmogi(level))
    if m is None:
        return c / math.sqrt(n)
    return c * math.sqrt((n + m) / (n * m))


def ks_one_sample(identity_id: str, x, cdf: Callable, seed: int = 0,
                  level: float = LEVEL, **params) -> TestReport:
    x = np.asarray(x, dtype=float)
    res = stats.kstest(x, cdf)
    return TestReport(identity_id, float(res.statistic), ks_critical(level, x.size),
                      x.size, seed, params, {"p_value": float(res.pvalue), "level": level})


def ks_two_sample(identity_id: str, x, y, seed: int = 0, level: float = LEVEL,
                  **params) -> TestReport:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    res = stats.ks_2samp(x, y)
    return TestReport(identity_id, float(res.statistic), ks_critical(level, x.size, y.size),
                      min(x.size, y.size), seed, params,
                      {"p_value": float(res.pvalue), "level": level})


def holm(p_values: Sequence[float], level: float = LEVEL) -> list[bool]:
    """Holm step-down rejections (``True`` = rejected at family level ``level``)."""
    p = np.asarray(p_values, dtype=float)
    order = np.argsort(p)
    reject = np.zeros(p.size, dtype=bool)
    for rank, idx in enumerate(order):
        if p[idx] > level / (p.size - rank):
            break
        reject[idx] = True
    return reject.tolist()


def z_p_value(z: float) -> float:
    return float(2.0 * stats.norm.sf(abs(z)))


def compare_estimates(identity_id: str, pairs: Sequence[tuple[str, MCEstimate, MCEstimate | float]],
                      n: int, seed: int, threshold: float = Z_THRESHOLD,
                      bias_allowance: float = 0.0, **params) -> TestReport:
    """Battery of ``|lhs - rhs| <= threshold * SE (+ bias_allowance * |rhs|)`` checks.

    The statistic is the worst standardized gap after removing the bias
    allowance; Holm-adjusted rejections are reported alongside.
    """
    rows, zs = [], []
    for label, lhs, rhs in pairs:
        rhs_est = rhs if isinstance(rhs, MCEstimate) else MCEstimate(float(rhs), 0.0, 0)
        gap = abs(lhs.mean - rhs_est.mean)
        se = math.hypot(lhs.std_error, rhs_est.std_error)
        slack = bias_allowance * abs(rhs_est.mean)
        excess = max(0.0, gap - slack)
        z = 0.0 if excess == 0 else (excess / se if se > 0 else math.inf)
        zs.append(z)
        rows.append({"label": label, "lhs": lhs.mean, "lhs_se": lhs.std_error,
                     "rhs": rhs_est.mean, "rhs_se": rhs_est.std_error, "z": z})
    rejected = holm([z_p_value(z) for z in zs]) if zs else []
    for row, rej in zip(rows, rejected):
        row["holm_reject"] = rej
    return TestReport(identity_id, max(zs, default=0.0), threshold, n, seed, params,
                      {"battery": rows, "battery_version": BATTERY_VERSION,
                       "bias_allowance": bias_allowance})


def lt_band(samples: WeightedSample, lambda_grid: Sequence[float], closed_form: Callable,
            identity_id: str = "lt_band", seed: int = 0, **params) -> TestReport:
    """Weighted empirical Laplace transform vs ``closed_form`` within 3 SE per lambda."""
    pairs = [(f"lambda={lam:g}", samples.mean(lambda x, lam=lam: np.exp(-lam * x)),
              float(closed_form(lam))) for lam in lambda_grid]
    return compare_estimates(identity_id, pairs, len(samples), seed, **params)


def require_ess(sample: WeightedSample, n: int, what: str, floor: float = ESS_FLOOR) -> float:
    ess = sample.ess
    if ess < floor * n:
        raise ConfigurationError(
            f"{what}: effective sample size {ess:.0f} is below {floor:g} * n = {floor * n:.0f}")
    return ess


def pearson_report(identity_id: str, x, y, seed: int = 0, **params) -> TestReport:
    """Independence proxy: ``|corr(x, y)| <= 3 / sqrt(n)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    rho = float(np.corrcoef(x, y)[0, 1])
    return TestReport(identity_id, abs(rho), 3.0 / math.sqrt(x.size), x.size, seed, params,
                      {"rho": rho})
