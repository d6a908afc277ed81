"""Random-variate generation for stable, tilted stable and generalized Linnik laws.

Every sampler takes a :class:`~spider_linnik.rng.RandomSource` (or a numpy
``Generator``) and an optional ``size``; with ``size=None`` a scalar is
returned. All draws are exact: stable variables come from Kanter's
representation and Esscher-tilted stable variables from chunked rejection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .rng import RandomSource, as_generator

U_CLAMP = 1e-12


class ParameterError(ValueError):
    """Raised for parameters outside a law's domain."""


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"alpha must lie strictly inside (0, 1), got {alpha}")
    return alpha


@dataclass(frozen=True)
class StableLaw:
    """One-sided stable law with Laplace transform ``exp(-lam**alpha)``."""

    alpha: float

    def __post_init__(self):
        _check_alpha(self.alpha)


@dataclass(frozen=True)
class TiltSpec:
    """Stable subordinator at time ``u``, Esscher-tilted by ``exp(-nu * x)``."""

    alpha: float
    nu: float
    u: float

    def __post_init__(self):
        _check_alpha(self.alpha)
        if not self.nu >= 0:
            raise ParameterError(f"tilt nu must be non-negative, got {self.nu}")
        if not self.u > 0:
            raise ParameterError(f"time u must be positive, got {self.u}")


@dataclass(frozen=True)
class LinnikSpec:
    """Generalized positive Linnik model ``mu . C^(nu)(gamma_t)``."""

    alpha: float
    mu: tuple[float, ...]
    nu: tuple[float, ...]
    t: float
    sigma: float = field(init=False)
    sigma_is_one: bool = field(init=False)

    def __post_init__(self):
        _check_alpha(self.alpha)
        mu = tuple(float(x) for x in np.atleast_1d(self.mu))
        nu = tuple(float(x) for x in np.atleast_1d(self.nu))
        if len(mu) != len(nu) or not mu:
            raise ParameterError("mu and nu must be non-empty and of equal length")
        if min(mu) < 0 or min(nu) < 0:
            raise ParameterError("mu and nu entries must be non-negative")
        if max(nu) <= 0:
            raise ParameterError("at least one nu entry must be strictly positive")
        if not self.t > 0:
            raise ParameterError(f"gamma time t must be positive, got {self.t}")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "nu", nu)
        sigma = math.fsum(x ** self.alpha for x in nu)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "sigma_is_one", abs(sigma - 1.0) < 1e-12)

    @property
    def n(self) -> int:
        return len(self.nu)

    def with_t(self, t: float) -> "LinnikSpec":
        return LinnikSpec(self.alpha, self.mu, self.nu, t)


# Fixed models used throughout the tests and the CLI.
EXAMPLE1 = LinnikSpec(0.5, (1.0, 1.0), (1.0, 0.0), 1.0)
EXAMPLE2 = LinnikSpec(0.5, (0.25, 0.0), (0.25, 0.25), 1.0)


def _kanter_log(alpha: float, u: np.ndarray, w: np.ndarray) -> np.ndarray:
    # w = 1 - u, passed separately so sin(pi*u) keeps precision near u = 1
    b = 1.0 / (1.0 - alpha)
    s_au = np.sin(np.pi * alpha * u)
    s_u = np.sin(np.pi * np.minimum(u, w))
    return (b * (np.log(s_au) - np.log(s_u))
            + np.log(np.sin((1.0 - alpha) * np.pi * u)) - np.log(s_au))


def kanter_limit_at_zero(alpha: float) -> float:
    alpha = _check_alpha(alpha)
    return alpha ** (alpha / (1.0 - alpha)) * (1.0 - alpha)


def kanter_k(alpha: float, u, limit: bool = False):
    """Kanter's function ``K(u)``, so that ``(K(U)/E)**((1-a)/a)`` is stable(a).

    ``K(u) = (sin(pi a u)/sin(pi u))**(1/(1-a)) * sin((1-a) pi u)/sin(pi a u)``.

    Arguments are clamped to ``[1e-12, 1 - 1e-12]``. Values outside ``(0, 1)``
    raise unless ``limit=True``, in which case ``u = 0`` gives the finite limit
    and ``u = 1`` gives ``inf``.
    """
    alpha = _check_alpha(alpha)
    arr = np.asarray(u, dtype=float)
    lo_bad = arr <= 0.0
    hi_bad = arr >= 1.0
    if not limit and (lo_bad.any() or hi_bad.any()):
        raise ParameterError("kanter_k requires 0 < u < 1 (pass limit=True for endpoints)")
    if limit and (np.any(arr < 0.0) or np.any(arr > 1.0)):
        raise ParameterError("kanter_k is only defined on [0, 1]")
    uc = np.clip(arr, U_CLAMP, 1.0 - U_CLAMP)
    out = np.exp(_kanter_log(alpha, uc, 1.0 - uc))
    if limit:
        out = np.where(lo_bad, kanter_limit_at_zero(alpha), out)
        out = np.where(hi_bad, np.inf, out)
    return out if out.ndim else float(out)


def kanter_k_tail(alpha: float, w) -> np.ndarray:
    """``K(1 - w)`` evaluated from ``w`` directly (accurate for tiny ``w``)."""
    alpha = _check_alpha(alpha)
    w = np.clip(np.asarray(w, dtype=float), U_CLAMP, 1.0 - U_CLAMP)
    return np.exp(_kanter_log(alpha, 1.0 - w, w))


def _stable(alpha: float, gen: np.random.Generator, size) -> np.ndarray:
    u = gen.random(size)
    e = gen.standard_exponential(size)
    uc = np.clip(u, U_CLAMP, 1.0 - U_CLAMP)
    k = np.exp(_kanter_log(alpha, uc, 1.0 - uc))
    return (k / e) ** ((1.0 - alpha) / alpha)


def _scalar_or_array(x: np.ndarray, size):
    return float(x) if size is None else x


def sample_stable(law: StableLaw | float, rng: RandomSource | np.random.Generator,
                  size=None):
    """Standard one-sided stable(alpha) draws via Kanter's representation."""
    alpha = law.alpha if isinstance(law, StableLaw) else _check_alpha(law)
    out = _stable(alpha, as_generator(rng), size)
    return _scalar_or_array(out, size)


def tilted_stable_at(alpha: float, nu: float, u, gen: np.random.Generator,
                     chunks=None) -> np.ndarray:
    """Tilted stable subordinator ``T^(nu)(u)`` for an array of times ``u``.

    Each time is split into ``k = ceil(u * nu**alpha)`` equal pieces (or
    ``chunks`` if given). Per piece a scaled stable proposal ``S`` is accepted
    with probability ``exp(-nu * S)``, at least ``exp(-1)`` with the default
    ``k``. Accepted pieces are summed.
    """
    u = np.asarray(u, dtype=float)
    shape = u.shape
    u = u.ravel()
    if nu == 0:
        return (u ** (1.0 / alpha) * _stable(alpha, gen, u.size)).reshape(shape)
    if chunks is None:
        k = np.maximum(1, np.ceil(u * nu ** alpha)).astype(np.int64)
    else:
        k = np.broadcast_to(np.asarray(chunks, dtype=np.int64), u.shape)
        if np.any(k < 1):
            raise ParameterError("chunk count must be >= 1")
    piece = np.repeat(u / k, k) ** (1.0 / alpha)
    values = np.empty(piece.size)
    pending = np.arange(piece.size)
    while pending.size:
        s = piece[pending] * _stable(alpha, gen, pending.size)
        accept = gen.random(pending.size) < np.exp(-nu * s)
        values[pending[accept]] = s[accept]
        pending = pending[~accept]
    starts = np.concatenate(([0], np.cumsum(k)[:-1]))
    return np.add.reduceat(values, starts).reshape(shape) if u.size else values.reshape(shape)


def sample_tilted_stable(spec: TiltSpec, rng: RandomSource | np.random.Generator,
                         size=None, chunks: int | None = None):
    """Exact draws of the Esscher-tilted stable subordinator ``T^(nu)(u)``."""
    gen = as_generator(rng)
    n = 1 if size is None else size
    out = tilted_stable_at(spec.alpha, spec.nu, np.full(n, spec.u), gen, chunks)
    return float(out[0]) if size is None else out


def sample_linnik_marginal(spec: LinnikSpec, rng: RandomSource | np.random.Generator,
                           size=None, time_scale: float = 1.0):
    """Draw ``(C^(nu)(gamma_t * time_scale), gamma_t)``.

    Returns the component array of shape ``(size, N)`` and the gamma time of
    shape ``(size,)``; ``mu . C`` is left to the caller. ``time_scale = 1/m``
    gives the operational times of the one-parameter extension.
    """
    gen = as_generator(rng)
    n = 1 if size is None else size
    g = gen.gamma(spec.t, 1.0, n)
    comps = np.column_stack([tilted_stable_at(spec.alpha, nu_i, g * time_scale, gen)
                             for nu_i in spec.nu])
    if size is None:
        return comps[0], float(g[0])
    return comps, g


def linnik_scalar(spec: LinnikSpec, rng, size=None):
    """``mu . C^(nu)(gamma_t)``: one-dimensional marginal of the Linnik process."""
    comps, _ = sample_linnik_marginal(spec, rng, 1 if size is None else size)
    out = comps @ np.asarray(spec.mu)
    return float(out[0]) if size is None else out


def _check_t(t: float) -> float:
    if not t > 0:
        raise ParameterError(f"t must be positive, got {t}")
    return float(t)


def sample_exact_marginal_example1(t: float, rng, size=None):
    """``gamma_{t/2} / beta(1/2, (1+t)/2)``."""
    t = _check_t(t)
    gen = as_generator(rng)
    out = gen.gamma(t / 2.0, 1.0, size) / gen.beta(0.5, (1.0 + t) / 2.0, size)
    return _scalar_or_array(np.asarray(out), size)


def sample_exact_marginal_example2(t: float, rng, size=None):
    """``gamma_{t/2} * beta((1+t)/2, (1+t)/2)``."""
    t = _check_t(t)
    gen = as_generator(rng)
    a = (1.0 + t) / 2.0
    out = gen.gamma(t / 2.0, 1.0, size) * gen.beta(a, a, size)
    return _scalar_or_array(np.asarray(out), size)


def sample_lamperti_ratio(alpha: float, rng, size=None):
    """Ratio ``T / T'`` of two independent stable(alpha) variables."""
    alpha = _check_alpha(alpha)
    gen = as_generator(rng)
    num = _stable(alpha, gen, size)
    den = _stable(alpha, gen, size)
    return _scalar_or_array(num / den, size)


def _check_probs(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ParameterError("ray probabilities must be a non-empty vector")
    if np.any(p < 0):
        raise ParameterError("ray probabilities must be non-negative")
    if not p.sum() > 0:
        raise ParameterError("ray probabilities must not all be zero")
    if abs(p.sum() - 1.0) > 1e-9:
        raise ParameterError(f"ray probabilities must sum to 1, got {p.sum()}")
    return p


def sample_spider_occupation(alpha: float, p, rng, size=None):
    """Occupation fractions and ``L_1**(1/alpha)`` of a Bessel spider at time 1.

    With ``c_i = p_i**(1/alpha) T_i`` and ``S = sum(c)``, returns ``A = c / S``
    (shape ``(size, N)``) and ``1 / S`` (shape ``(size,)``).
    """
    alpha = _check_alpha(alpha)
    p = _check_probs(p)
    gen = as_generator(rng)
    n = 1 if size is None else size
    c = p ** (1.0 / alpha) * _stable(alpha, gen, (n, p.size))
    total = c.sum(axis=1)
    a = c / total[:, None]
    if size is None:
        return a[0], float(1.0 / total[0])
    return a, 1.0 / total
