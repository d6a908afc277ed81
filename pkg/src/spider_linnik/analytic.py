"""Laplace exponents, densities and Levy measures in closed form or by quadrature.

Kanter's representation gives the stable(alpha) density as a one-dimensional
integral over ``(0, 1)``; products of two such integrals give the conditional
law of ``T'`` given the Lamperti ratio ``R = T/T'`` and its negative moments.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .estimates import MCEstimate
from .quadrature import (QuadratureConfig, QuadratureError, log_axis_rule, refine,
                         unit_rule)
from .rng import as_generator
from .samplers import (LinnikSpec, ParameterError, _check_alpha, _kanter_log, _stable,
                       kanter_k, kanter_limit_at_zero)

DEFAULT_QUAD = QuadratureConfig()


def tilted_exponent(alpha: float, nu, lam):
    """Laplace exponent ``(nu + lam)**alpha - nu**alpha`` of the tilted stable law."""
    alpha = _check_alpha(alpha)
    nu = np.asarray(nu, dtype=float)
    lam = np.asarray(lam, dtype=float)
    out = (nu + lam) ** alpha - nu ** alpha
    return out if out.ndim else float(out)


def linnik_exponent(spec: LinnikSpec, lam):
    """``log(1 + sum_i [(nu_i + lam mu_i)**alpha - nu_i**alpha])``, per unit of t."""
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise ParameterError("Laplace argument must be non-negative")
    mu = np.asarray(spec.mu)
    nu = np.asarray(spec.nu)
    inner = sum(tilted_exponent(spec.alpha, nu[i], lam * mu[i]) for i in range(spec.n))
    out = np.log1p(inner)
    return out if np.ndim(out) else float(out)


def linnik_laplace(spec: LinnikSpec, lam):
    """``E[exp(-lam * mu . C(gamma_t))] = (1 + sum_i [...])**(-t)``."""
    out = np.exp(-spec.t * np.asarray(linnik_exponent(spec, lam)))
    return out if np.ndim(out) else float(out)


# --------------------------------------------------------------------------
# one-dimensional Kanter integrals


def _kanter_scalar(alpha: float):
    b = 1.0 / (1.0 - alpha)
    pa = math.pi * alpha
    pb = (1.0 - alpha) * math.pi

    def log_k(u: float, w: float) -> float:
        s = math.sin(pa * u)
        return b * (math.log(s) - math.log(math.sin(math.pi * w))) + math.log(math.sin(pb * u)) - math.log(s)

    return log_k


def _quad(fn, lo, hi, cfg: QuadratureConfig, what: str):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        value, err, info, *rest = integrate.quad(fn, lo, hi, epsabs=cfg.abs_tol,
                                                 epsrel=cfg.rel_tol,
                                                 limit=cfg.max_subdivisions,
                                                 full_output=1)
    if rest and not cfg.converged(value, err):
        raise QuadratureError(f"{what}: {rest[0]}".splitlines()[0], err)
    return value, err


def _kanter_integral(alpha: float, v: float, power: int, cfg: QuadratureConfig) -> float:
    """``int_0^1 K(u)**power * exp(-v K(u)) du`` split at u = 1/2."""
    log_k = _kanter_scalar(alpha)
    k0 = math.log(kanter_limit_at_zero(alpha))

    def head(u):
        lk = log_k(u, 1.0 - u) if u > 0 else k0
        return math.exp(power * lk - v * math.exp(lk))

    def tail(z):
        w = math.exp(-z)
        lk = log_k(1.0 - w, w)
        return math.exp(power * lk - v * math.exp(lk) - z)

    a, _ = _quad(head, 0.0, 0.5, cfg, "Kanter integral")
    b, _ = _quad(tail, math.log(2.0), -math.log(1e-12), cfg, "Kanter integral")
    return a + b


def stable_density(alpha: float, s, cfg: QuadratureConfig = DEFAULT_QUAD):
    """One-sided stable(alpha) density from Kanter's integral.

    ``f(s) = a/(1-a) s**(-1/(1-a)) int_0^1 exp(-s**(-a/(1-a)) K(u)) K(u) du``.
    """
    alpha = _check_alpha(alpha)
    arr = np.asarray(s, dtype=float)
    if np.any(arr <= 0):
        raise ParameterError("stable density is evaluated at s > 0")
    q = alpha / (1.0 - alpha)
    out = np.empty(arr.shape)
    for idx, x in np.ndenumerate(arr):
        v = x ** (-q)
        if v * kanter_limit_at_zero(alpha) > 745.0:
            out[idx] = 0.0
            continue
        out[idx] = q * x ** (-1.0 / (1.0 - alpha)) * _kanter_integral(alpha, v, 1, cfg)
    return out if out.ndim else float(out)


def stable_cdf(alpha: float, s, cfg: QuadratureConfig = DEFAULT_QUAD):
    """``P(T <= s) = int_0^1 exp(-s**(-a/(1-a)) K(u)) du``."""
    alpha = _check_alpha(alpha)
    arr = np.asarray(s, dtype=float)
    q = alpha / (1.0 - alpha)
    out = np.empty(arr.shape)
    for idx, x in np.ndenumerate(arr):
        out[idx] = 0.0 if x <= 0 else _kanter_integral(alpha, x ** (-q), 0, cfg)
    return out if out.ndim else float(out)


def stable_tail_cutoff(alpha: float, eps: float = 1e-9) -> float:
    """``S`` with asymptotic tail ``S**(-alpha)/Gamma(1-alpha) = eps``."""
    return (1.0 / (eps * special.gamma(1.0 - alpha))) ** (1.0 / alpha)


def stable_density_mass(alpha: float, cfg: QuadratureConfig = DEFAULT_QUAD,
                        eps: float = 1e-9) -> float:
    """``int_0^S f(s) ds`` with ``S`` from :func:`stable_tail_cutoff`."""
    alpha = _check_alpha(alpha)
    q = alpha / (1.0 - alpha)
    y_hi = math.log(stable_tail_cutoff(alpha, eps))
    # below y_lo the integrand is below exp(-745)
    y_lo = -math.log(745.0 / kanter_limit_at_zero(alpha)) / q
    inner = QuadratureConfig(cfg.abs_tol * 1e-2, cfg.rel_tol, cfg.max_subdivisions)

    def integrand(y):
        x = math.exp(y)
        return x * float(stable_density(alpha, x, inner))

    edges = np.linspace(y_lo, y_hi, 12)
    return math.fsum(_quad(integrand, a, b, cfg, "stable density mass")[0]
                     for a, b in zip(edges[:-1], edges[1:]))


# --------------------------------------------------------------------------
# Lamperti ratio


def lamperti_density(alpha: float, r):
    """Density of ``R = T/T'``: ``sin(pi a)/pi * r**(a-1)/(r**(2a) + 2 r**a cos(pi a) + 1)``."""
    alpha = _check_alpha(alpha)
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ParameterError("Lamperti density is evaluated at r > 0")
    ra = r ** alpha
    out = math.sin(math.pi * alpha) / math.pi * r ** (alpha - 1.0) / (
        ra * ra + 2.0 * ra * math.cos(math.pi * alpha) + 1.0)
    return out if out.ndim else float(out)


def lamperti_cdf(alpha: float, r):
    """Closed-form CDF of the Lamperti ratio."""
    alpha = _check_alpha(alpha)
    r = np.asarray(r, dtype=float)
    s, c = math.sin(math.pi * alpha), math.cos(math.pi * alpha)
    x = np.where(r > 0, r, 0.0) ** alpha
    out = (np.arctan((x + c) / s) - (math.pi / 2.0 - math.pi * alpha)) / (math.pi * alpha)
    out = np.clip(out, 0.0, 1.0)
    return out if out.ndim else float(out)


def lamperti_quantile(alpha: float, v):
    """Inverse CDF: ``R = (sin(pi a v) / sin(pi a (1 - v)))**(1/a)``."""
    alpha = _check_alpha(alpha)
    v = np.asarray(v, dtype=float)
    out = (np.sin(math.pi * alpha * v) / np.sin(math.pi * alpha * (1.0 - v))) ** (1.0 / alpha)
    return out if out.ndim else float(out)


def lamperti_expectation(alpha: float, fn, cfg: QuadratureConfig = DEFAULT_QUAD) -> float:
    """``E[fn(R)]`` by quadrature over the quantile ``v`` in (0, 1).

    Panels are graded geometrically towards both ends, where ``R`` runs off to
    0 or infinity and ``fn`` may have features narrower than one QUADPACK node.
    """
    ends = 10.0 ** -np.arange(12, 0, -1)
    edges = np.concatenate(([0.0], ends, [0.5], 1.0 - ends[::-1], [1.0]))
    return math.fsum(_quad(lambda v: fn(float(lamperti_quantile(alpha, v))), a, b, cfg,
                           "Lamperti expectation")[0] for a, b in zip(edges[:-1], edges[1:]))


# --------------------------------------------------------------------------
# two-dimensional Kanter integrals: conditional law of T' given R = r


def _log_ratio_prefactor(alpha: float, r: np.ndarray) -> np.ndarray:
    # log of pi r^{-a(2-a)/(1-a)} (r^{2a} + 2 r^a cos(pi a) + 1) / sin(pi a)
    ra = r ** alpha
    return (math.log(math.pi / math.sin(math.pi * alpha))
            - alpha * (2.0 - alpha) / (1.0 - alpha) * np.log(r)
            + np.log(ra * ra + 2.0 * ra * math.cos(math.pi * alpha) + 1.0))


def _kanter_nodes(alpha: float, level: int):
    rule = unit_rule(level)
    log_k = _kanter_log(alpha, rule.u, rule.w)
    return log_k, np.log(rule.weights)


def _double_kanter(alpha: float, log_a: np.ndarray, level: int, kernel, batch: int = 8):
    """``sum_ij W_i W_j K_i K_j kernel(log C_ij)`` for ``C = a K_i + K_j``, per ``a``."""
    lk, lw = _kanter_nodes(alpha, level)
    base = (lk + lw)[:, None] + (lk + lw)[None, :]
    out = np.empty(log_a.size)
    for start in range(0, log_a.size, batch):
        la = log_a[start:start + batch]
        log_c = np.logaddexp(la[:, None, None] + lk[None, :, None], lk[None, None, :])
        out[start:start + batch] = kernel(log_c, base[None, :, :])
    return out


def conditional_density_tprime(alpha: float, s, r: float,
                               cfg: QuadratureConfig = DEFAULT_QUAD, max_level: int = 3):
    """Density of ``T'`` given ``T/T' = r``, evaluated at ``s``.

    Uses ``f(s|r) = s f(rs) f(s) / f_R(r)`` with both stable densities written
    as Kanter integrals, i.e. a 2D integral over ``(u1, u2)``.
    """
    alpha = _check_alpha(alpha)
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(s <= 0) or not r > 0:
        raise ParameterError("conditional density needs s > 0 and r > 0")
    q = alpha / (1.0 - alpha)
    log_a = np.full(1, -q * math.log(r))
    log_pre = (float(_log_ratio_prefactor(alpha, np.asarray(r))) + 2.0 * math.log(q)
               + (1.0 - 2.0 / (1.0 - alpha)) * np.log(s))
    v = s ** (-q)

    def at_level(level):
        lk, lw = _kanter_nodes(alpha, level)
        base = (lk + lw)[:, None] + (lk + lw)[None, :]
        log_c = np.logaddexp(log_a[0] + lk[:, None], lk[None, :])
        c = np.exp(log_c)
        vals = np.empty(v.size)
        for i, vi in enumerate(v):
            vals[i] = np.exp(base - vi * c).sum()
        return np.exp(log_pre) * vals

    value, _ = refine(at_level, cfg, 0, max_level, "conditional density")
    return value if value.size > 1 else float(value[0])


def h_alpha_t(alpha: float, t: float, r, cfg: QuadratureConfig = DEFAULT_QUAD,
              max_level: int = 3):
    """``E[T'**(-alpha t) | T/T' = r]`` via the double Kanter integral.

    ``h = pi r^{-a(2-a)/(1-a)} (r^{2a} + 2 r^a cos(pi a) + 1) / sin(pi a)
    * a Gamma(t(1-a)+2) / (1-a) * D(r)`` with
    ``D(r) = int int C**(-(t(1-a)+2)) K(u1) K(u2) du1 du2`` and
    ``C = r^{-a/(1-a)} K(u1) + K(u2)``.
    """
    alpha = _check_alpha(alpha)
    if t < 0:
        raise ParameterError("h_alpha_t needs t >= 0")
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r_arr <= 0):
        raise ParameterError("h_alpha_t needs r > 0")
    q = alpha / (1.0 - alpha)
    p = t * (1.0 - alpha) + 2.0
    log_a = -q * np.log(r_arr)
    log_pre = (_log_ratio_prefactor(alpha, r_arr) + math.log(alpha / (1.0 - alpha))
               + special.gammaln(p))

    def kernel(log_c, base):
        return np.exp(base - p * log_c).reshape(log_c.shape[0], -1).sum(axis=1)

    def at_level(level):
        return np.exp(log_pre) * _double_kanter(alpha, log_a, level, kernel)

    value, _ = refine(at_level, cfg, 0, max_level, "h_alpha_t")
    return value if np.ndim(r) else float(value[0])


def h_moment(alpha: float, t: float, cfg: QuadratureConfig = QuadratureConfig(1e-10, 1e-8),
             tail: float = 1e-8, panels_per_unit: float = 1.0) -> float:
    """``int_0^inf h_alpha_t(r) f_R(r) dr`` by quadrature in ``log r``.

    The range is cut where the Lamperti tail mass drops below ``tail``.
    """
    alpha = _check_alpha(alpha)
    y_max = math.log(1.0 / (tail * math.pi * alpha)) / alpha
    panels = max(8, int(2 * y_max * panels_per_unit))
    y, wy = log_axis_rule(-y_max, y_max, panels, 8)
    r = np.exp(y)
    vals = h_alpha_t(alpha, t, r, cfg) * lamperti_density(alpha, r) * r
    return float(vals @ wy)


@dataclass
class HTable:
    """Spline of ``log h_alpha_t`` on a ``log r`` grid, linearly extrapolated."""

    alpha: float
    t: float
    log_r: np.ndarray
    log_h: np.ndarray

    @classmethod
    def build(cls, alpha: float, t: float, y_max: float = 30.0, points: int = 241,
              cfg: QuadratureConfig = QuadratureConfig(1e-12, 1e-7)) -> "HTable":
        y = np.linspace(-y_max, y_max, points)
        return cls(alpha, t, y, np.log(h_alpha_t(alpha, t, np.exp(y), cfg)))

    def __call__(self, r) -> np.ndarray:
        from scipy.interpolate import CubicSpline
        spline = getattr(self, "_spline", None)
        if spline is None:
            spline = CubicSpline(self.log_r, self.log_h, extrapolate=False)
            self._spline = spline
        y = np.log(np.asarray(r, dtype=float))
        out = spline(np.clip(y, self.log_r[0], self.log_r[-1]))
        lo_slope = (self.log_h[1] - self.log_h[0]) / (self.log_r[1] - self.log_r[0])
        hi_slope = (self.log_h[-1] - self.log_h[-2]) / (self.log_r[-1] - self.log_r[-2])
        out = np.where(y < self.log_r[0], self.log_h[0] + lo_slope * (y - self.log_r[0]), out)
        out = np.where(y > self.log_r[-1], self.log_h[-1] + hi_slope * (y - self.log_r[-1]), out)
        return np.exp(out)


# --------------------------------------------------------------------------
# Levy measure of the Linnik process


@dataclass(frozen=True)
class LevyQuery:
    """Point ``x`` at which to evaluate ``alpha/x * E[exp(-x G)]``, ``G = nu.T / mu.T``."""

    spec: LinnikSpec
    x: float
    mc_n: int = 100_000

    def __post_init__(self):
        if not self.x > 0:
            raise ParameterError("Levy density is evaluated at x > 0")
        if self.mc_n < 10_000:
            raise ParameterError("mc_n must be at least 1e4")


def _require_sigma_one(spec: LinnikSpec):
    if abs(spec.sigma - 1.0) > 1e-9:
        raise ParameterError(
            f"the GGC Levy-measure formula needs sum(nu**alpha) = 1, got {spec.sigma:.6g}")


def ratio_g(spec: LinnikSpec, r):
    """``G`` for N = 2 as a function of ``R = T1/T2``: ``(nu1 R + nu2)/(mu1 R + mu2)``."""
    (m1, m2), (n1, n2) = spec.mu, spec.nu
    r = np.asarray(r, dtype=float)
    return (n1 * r + n2) / (m1 * r + m2)


def antithetic_stable(alpha: float, gen: np.random.Generator, pairs: int, dim: int):
    """Stable vectors in antithetic pairs (``U -> 1-U``, ``E -> -log(1 - exp(-E))``)."""
    u = gen.random((pairs, dim))
    v = gen.random((pairs, dim))
    uu = np.clip(np.concatenate([u, 1.0 - u]), 1e-12, 1 - 1e-12)
    e = -np.log(np.clip(np.concatenate([v, 1.0 - v]), 1e-300, None))
    k = np.exp(_kanter_log(alpha, uu, 1.0 - uu))
    return (k / e) ** ((1.0 - alpha) / alpha)


def _paired_estimate(values: np.ndarray) -> MCEstimate:
    pairs = values.size // 2
    means = 0.5 * (values[:pairs] + values[pairs:])
    return MCEstimate(float(means.mean()), float(means.std(ddof=1) / math.sqrt(pairs)),
                      values.size)


def levy_density(q: LevyQuery, rng=None, cfg: QuadratureConfig = DEFAULT_QUAD) -> MCEstimate:
    """Levy density ``alpha x**-1 E[exp(-x (nu.T)/(mu.T))]`` of ``mu . C(gamma_t)``.

    N = 2 uses quadrature against the Lamperti law (``std_error`` then holds the
    quadrature error bound); N > 2 uses antithetic Monte Carlo with ``q.mc_n``
    draws. N = 1 is closed form.
    """
    spec, x = q.spec, q.x
    _require_sigma_one(spec)
    alpha = spec.alpha
    if spec.n == 1:
        g = spec.nu[0] / spec.mu[0]
        return MCEstimate(alpha / x * math.exp(-x * g), 0.0, 0)
    if spec.n == 2:
        value = lamperti_expectation(alpha, lambda r: math.exp(-x * float(ratio_g(spec, r))), cfg)
        return MCEstimate(alpha / x * value, cfg.abs_tol, 0)
    gen = as_generator(rng)
    t = antithetic_stable(alpha, gen, q.mc_n // 2, spec.n)
    g = (t @ np.asarray(spec.nu)) / (t @ np.asarray(spec.mu))
    return _paired_estimate(np.exp(-x * g)).scaled(alpha / x)


def levy_exponent_check(spec: LinnikSpec, lam: float, rng=None, mc_n: int = 200_000,
                        cfg: QuadratureConfig = DEFAULT_QUAD):
    """Both sides of ``alpha E[log(1 + lam (mu.T)/(nu.T))] = log(1 + sum ...)``.

    Returns ``(lhs, rhs)`` where ``lhs`` is an :class:`MCEstimate` (quadrature
    for N <= 2, Monte Carlo otherwise) and ``rhs`` a float.
    """
    _require_sigma_one(spec)
    rhs = float(linnik_exponent(spec, lam))
    if lam == 0:
        return MCEstimate(0.0, 0.0, 0), 0.0
    alpha = spec.alpha
    if spec.n == 1:
        return MCEstimate(alpha * math.log1p(lam * spec.mu[0] / spec.nu[0]), 0.0, 0), rhs
    if spec.n == 2:
        value = lamperti_expectation(
            alpha, lambda r: math.log1p(lam / float(ratio_g(spec, r))), cfg)
        return MCEstimate(alpha * value, cfg.abs_tol, 0), rhs
    gen = as_generator(rng)
    t = antithetic_stable(alpha, gen, mc_n // 2, spec.n)
    inv_g = (t @ np.asarray(spec.mu)) / (t @ np.asarray(spec.nu))
    return _paired_estimate(np.log1p(lam * inv_g)).scaled(alpha), rhs


def levy_integral(spec: LinnikSpec, fn, x_lo: float, x_hi: float,
                  cfg: QuadratureConfig = QuadratureConfig(1e-10, 1e-8)) -> float:
    """``int fn(x) levy_density(x) dx`` over ``[x_lo, x_hi]`` (N <= 2)."""
    if spec.n > 2:
        raise ParameterError("levy_integral uses quadrature and supports N <= 2")

    def integrand(x):
        return fn(x) * levy_density(LevyQuery(spec, x), cfg=cfg).mean

    value, _ = _quad(integrand, x_lo, x_hi, cfg, "Levy integral")
    return value
