"""Discrete-time N-ray spider walk: the alpha = 1/2 Bessel spider at desk scale.

The radial part is a simple random walk reflected at 0. Each excursion from 0
picks ray ``i`` with probability ``p_i``. The integer ``occupation`` counts
give the step leaving 0 to the chosen ray, so they sum to the number of steps.
Occupation *times* instead split every step taken from 0 as ``p_i`` per ray:
in the continuum that unit of time is spent in tiny excursions on all rays,
and the split removes the O(1/sqrt(n)) atom the integer counts put at the
simplex boundary.

Time is rescaled by ``1/n_steps``. The local time at 0 is
``local_time_scale * zero_visits / sqrt(n_steps)`` and the radial distance is
``radial_scale * end_distance / sqrt(n_steps)``. With both scales equal to
``sqrt(2)`` the process ``|S| - L`` is a martingale and the inverse local
time has Laplace exponent ``psi(theta) = sqrt(theta)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .estimates import MCEstimate, TestReport, WeightedSample
from .identities.catalog import bridge_sample
from .identities.engine import (compare_estimates, ks_one_sample, ks_two_sample,
                                weighted_ks_report)
from .rng import RandomSource, as_source, concat_chunks, map_chunks
from .samplers import ParameterError, _check_probs, sample_spider_occupation

SQRT2 = math.sqrt(2.0)
AT_ORIGIN = -1
PATHS_PER_CHUNK = 500
BRIDGE_ATTEMPT_CAP = 10_000
MIN_BIN_PATHS = 100
LOCAL_TIME_BINS = 20


def psi(theta):
    """Laplace exponent of the inverse local time at 0 of the alpha = 1/2 spider."""
    return np.sqrt(theta)


@dataclass(frozen=True)
class SpiderConfig:
    num_rays: int
    ray_probs: tuple
    steps: int = 10_000
    local_time_scale: float = SQRT2
    radial_scale: float = SQRT2

    def __post_init__(self):
        p = _check_probs(self.ray_probs)
        object.__setattr__(self, "ray_probs", tuple(float(x) for x in p))
        if self.num_rays != p.size:
            raise ParameterError(f"num_rays={self.num_rays} but {p.size} ray probabilities given")
        if self.steps < 1000:
            raise ParameterError("steps must be at least 1000")
        if not (self.local_time_scale > 0 and self.radial_scale > 0):
            raise ParameterError("scales must be positive")

    @classmethod
    def of(cls, p, steps: int = 10_000, **kw) -> "SpiderConfig":
        p = tuple(float(x) for x in np.atleast_1d(p))
        return cls(len(p), p, steps, **kw)


@dataclass
class SpiderPathSummary:
    """Per-path summaries of a batch of walks (one row per path).

    ``occupation[k, i]`` counts steps on ray ``i``; ``end_ray`` is ``AT_ORIGIN``
    for paths ending at 0. ``steps`` holds each path's length (constant unless
    the paths were killed); ``excursions[k, i]`` counts excursions on ray ``i``.
    ``time`` and ``time_before_last_zero`` are the split-convention occupation
    times (in steps) up to the end and up to the last zero.
    """

    occupation: np.ndarray
    zero_visits: np.ndarray
    end_ray: np.ndarray
    end_distance: np.ndarray
    steps: np.ndarray
    excursions: np.ndarray = field(repr=False)
    time: np.ndarray = field(repr=False)
    time_before_last_zero: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return self.zero_visits.size

    @property
    def fractions(self) -> np.ndarray:
        return self.time / self.steps[:, None]

    @classmethod
    def concat(cls, parts: list["SpiderPathSummary"]) -> "SpiderPathSummary":
        return cls(*(np.concatenate([getattr(p, f) for p in parts]) for f in _FIELDS))

    def to_csv(self, path) -> None:
        n_rays = self.occupation.shape[1]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"occupation_{i}" for i in range(n_rays)]
                       + ["zero_visits", "end_ray", "end_distance", "steps"])
            for k in range(len(self)):
                end = "origin" if self.end_ray[k] == AT_ORIGIN else int(self.end_ray[k])
                w.writerow([*map(int, self.occupation[k]), int(self.zero_visits[k]), end,
                            int(self.end_distance[k]), int(self.steps[k])])


_FIELDS = ("occupation", "zero_visits", "end_ray", "end_distance", "steps", "excursions",
           "time", "time_before_last_zero")


def _summarize(increments: np.ndarray, lengths: np.ndarray, p: np.ndarray,
               gen: np.random.Generator) -> SpiderPathSummary:
    """Summaries of reflected walks stored back to back in ``increments``."""
    b = lengths.size
    ends = np.cumsum(lengths)
    starts = ends - lengths
    seg = np.repeat(np.arange(b), lengths)
    csum = np.cumsum(increments, dtype=np.int64)
    base = np.concatenate(([0], csum[ends[:-1] - 1]))
    dist = np.abs(csum - base[seg])  # |W_k| for k = 1..len, per path
    # the step at flat position j starts from 0 iff the previous distance is 0
    from_zero = np.empty(dist.size, dtype=bool)
    from_zero[1:] = dist[:-1] == 0
    from_zero[starts] = True
    zero_visits = np.bincount(seg, weights=from_zero, minlength=b).astype(np.int64)
    excursion = np.cumsum(from_zero) - 1
    rays = gen.choice(p.size, size=int(zero_visits.sum()), p=p)
    step_ray = rays[excursion]
    n_rays = p.size
    occ = np.bincount(seg * n_rays + step_ray, minlength=b * n_rays).reshape(b, n_rays)
    exc = np.bincount(seg[from_zero] * n_rays + rays, minlength=b * n_rays).reshape(b, n_rays)
    last = excursion[ends - 1]
    done = excursion < last[seg]
    occ_done = np.bincount(seg[done] * n_rays + step_ray[done],
                           minlength=b * n_rays).reshape(b, n_rays)
    exc_done = exc.copy()
    exc_done[np.arange(b), rays[last]] -= 1
    time = occ - exc + p * zero_visits[:, None]
    time_done = occ_done - exc_done + p * (zero_visits - 1)[:, None]
    end_distance = dist[ends - 1]
    end_ray = np.where(end_distance > 0, step_ray[ends - 1], AT_ORIGIN)
    return SpiderPathSummary(occ, zero_visits, end_ray, end_distance, lengths.astype(np.int64),
                             exc, time, time_done)


def _signs(gen: np.random.Generator, size: int) -> np.ndarray:
    return (2 * gen.integers(0, 2, size, dtype=np.int8) - 1).astype(np.int8)


def _walk_chunk(cfg: SpiderConfig, size: int, gen: np.random.Generator) -> SpiderPathSummary:
    lengths = np.full(size, cfg.steps, dtype=np.int64)
    return _summarize(_signs(gen, size * cfg.steps), lengths, np.asarray(cfg.ray_probs), gen)


def simulate_spider(cfg: SpiderConfig, rng=None, n_paths: int = 1) -> SpiderPathSummary:
    """``n_paths`` independent spider walks of ``cfg.steps`` steps from the origin."""
    rng = as_source(rng)
    parts = map_chunks(lambda size, src: _walk_chunk(cfg, size, src.generator), n_paths, rng,
                       chunk_size=PATHS_PER_CHUNK)
    return SpiderPathSummary.concat(parts)


def local_time(summary: SpiderPathSummary, cfg: SpiderConfig) -> np.ndarray:
    """``c * zero_visits / sqrt(n)`` per path, ``c = cfg.local_time_scale``."""
    return cfg.local_time_scale * summary.zero_visits / math.sqrt(cfg.steps)


def radial_distance(summary: SpiderPathSummary, cfg: SpiderConfig) -> np.ndarray:
    return cfg.radial_scale * summary.end_distance / math.sqrt(cfg.steps)


def local_time_spacing(cfg: SpiderConfig) -> float:
    return cfg.local_time_scale / math.sqrt(cfg.steps)


def dithered_local_time(summary: SpiderPathSummary, cfg: SpiderConfig,
                        gen: np.random.Generator) -> np.ndarray:
    """Local time minus a uniform fraction of one lattice step (continuity correction)."""
    lt = local_time(summary, cfg)
    return lt - gen.random(lt.size) * local_time_spacing(cfg)


def _calibration(s: SpiderPathSummary, cfg: SpiderConfig) -> MCEstimate:
    r = radial_distance(s, cfg)
    z = s.zero_visits / math.sqrt(cfg.steps)
    ratio = r.mean() / z.mean()
    resid = (r - ratio * z) / z.mean()
    return MCEstimate(float(ratio), float(resid.std(ddof=1) / math.sqrt(resid.size)), resid.size)


def calibrate_local_time_scale(cfg: SpiderConfig, n_paths: int = 100_000,
                               rng=None) -> MCEstimate:
    """Estimate ``c`` from the martingale ``|S_1| - L_1``: ``E[L_1] = E[|S_1|]``.

    Returns the ratio ``E[radial_distance] / E[zero_visits / sqrt(n)]`` with a
    delta-method standard error.
    """
    return _calibration(simulate_spider(cfg, rng, n_paths), cfg)


def verify_martingale(cfg: SpiderConfig, n_paths: int = 100_000, rng=None) -> TestReport:
    """``E[L_1] = E[|S_1|]`` with the frozen scales (paired comparison)."""
    rng = as_source(rng)
    s = simulate_spider(cfg, rng, n_paths)
    diff = MCEstimate.from_samples(local_time(s, cfg) - radial_distance(s, cfg))
    report = compare_estimates("spider_martingale", [("E[L - |S|]", diff, 0.0)], n_paths,
                               rng.master_seed, p=cfg.ray_probs, steps=cfg.steps)
    report.details["calibrated_c"] = _calibration(s, cfg)
    return report


# --------------------------------------------------------------------------
# bridges


class BridgeCapError(RuntimeError):
    """Rejection sampling of bridges exhausted its attempt budget."""


def _exchangeable_bridge_chunk(cfg: SpiderConfig, size: int, gen) -> SpiderPathSummary:
    half = cfg.steps // 2
    base = np.concatenate([np.ones(half, np.int8), -np.ones(half, np.int8)])
    inc = gen.permuted(np.tile(base, (size, 1)), axis=1).ravel()
    lengths = np.full(size, cfg.steps, dtype=np.int64)
    return _summarize(inc, lengths, np.asarray(cfg.ray_probs), gen)


def _rejection_bridge_chunk(cfg: SpiderConfig, size: int, gen, cap: int) -> SpiderPathSummary:
    kept, have, attempts = [], 0, 0
    batch = max(size, 64)
    while have < size:
        if attempts >= cap * size:
            raise BridgeCapError(
                f"{attempts} attempts gave {have}/{size} bridges; reduce steps "
                f"(return probability ~ {math.sqrt(2 / (math.pi * cfg.steps)):.2g})")
        s = _walk_chunk(cfg, batch, gen)
        attempts += batch
        ok = np.flatnonzero(s.end_distance == 0)
        if ok.size:
            kept.append(SpiderPathSummary(*(getattr(s, f)[ok] for f in _FIELDS)))
            have += ok.size
    out = SpiderPathSummary.concat(kept)
    return SpiderPathSummary(*(getattr(out, f)[:size] for f in _FIELDS))


def simulate_bridge(cfg: SpiderConfig, rng=None, n_paths: int = 1, method: str = "exchangeable",
                    cap: int = BRIDGE_ATTEMPT_CAP, fallback: bool = True) -> SpiderPathSummary:
    """Spider walks conditioned to be at 0 after ``cfg.steps`` (even) steps.

    ``method="exchangeable"`` shuffles ``n/2`` up and ``n/2`` down steps, which
    is exactly uniform over walk bridges. ``method="rejection"`` resimulates
    free walks until they end at 0; after ``cap`` attempts per path it either
    falls back to the exchangeable construction or raises :class:`BridgeCapError`.
    """
    if cfg.steps % 2:
        raise ParameterError("bridges need an even number of steps")
    rng = as_source(rng)
    if method == "exchangeable":
        fn = lambda size, src: _exchangeable_bridge_chunk(cfg, size, src.generator)  # noqa: E731
    elif method == "rejection":
        def fn(size, src):
            try:
                return _rejection_bridge_chunk(cfg, size, src.generator, cap)
            except BridgeCapError:
                if not fallback:
                    raise
                return _exchangeable_bridge_chunk(cfg, size, src.substream(0).generator)
    else:
        raise ParameterError(f"unknown bridge method {method!r}")
    return SpiderPathSummary.concat(map_chunks(fn, n_paths, rng, chunk_size=PATHS_PER_CHUNK))


# --------------------------------------------------------------------------
# checks against the stable-ratio representation


def verify_arcsine(cfg: SpiderConfig | None = None, n_paths: int = 10_000, rng=None) -> TestReport:
    """Fraction of time on ray 0 of a two-ray symmetric spider vs arcsine law."""
    cfg = cfg or SpiderConfig.of((0.5, 0.5))
    rng = as_source(rng)
    s = simulate_spider(cfg, rng, n_paths)
    return ks_one_sample("spider_arcsine", s.fractions[:, 0], stats.beta(0.5, 0.5).cdf,
                         rng.master_seed, steps=cfg.steps)


def verify_theorem1(cfg: SpiderConfig, n_paths: int = 10_000, rng=None,
                    n_ref: int = 100_000) -> TestReport:
    """Occupation fractions and ``L_1`` of the walk vs the stable-ratio representation."""
    rng = as_source(rng)
    seed = rng.master_seed
    s = simulate_spider(cfg, rng.substream(0), n_paths)
    a, inv_sum = concat_chunks(map_chunks(
        lambda size, src: sample_spider_occupation(0.5, cfg.ray_probs, src, size),
        n_ref, rng.substream(1)))
    subs = [ks_two_sample(f"fraction{i}", s.fractions[:, i], a[:, i], seed)
            for i in range(cfg.num_rays) if cfg.ray_probs[i] > 0]
    lt = dithered_local_time(s, cfg, rng.substream(2).generator)
    subs.append(ks_two_sample("local_time", lt, np.sqrt(inv_sum), seed))
    return TestReport.combine("spider_theorem1", subs, n_paths, seed,
                              {"p": cfg.ray_probs, "steps": cfg.steps})


def verify_bridge_uniform(cfg: SpiderConfig | None = None, n_paths: int = 10_000, rng=None,
                          method: str = "exchangeable") -> TestReport:
    """Bridge occupation fraction of ray 0 (two symmetric rays) vs Uniform(0, 1)."""
    cfg = cfg or SpiderConfig.of((0.5, 0.5))
    rng = as_source(rng)
    b = simulate_bridge(cfg, rng, n_paths, method=method)
    rep = ks_one_sample("spider_bridge_uniform", b.fractions[:, 0], stats.uniform.cdf,
                        rng.master_seed, steps=cfg.steps, method=method)
    rep.details["all_end_at_origin"] = bool(np.all(b.end_distance == 0))
    return rep


def verify_bridge_weighted(cfg: SpiderConfig, n_paths: int = 10_000, rng=None,
                           n_ref: int = 100_000, bridge_exponent: float | None = None) -> TestReport:
    """Walk bridges vs the reweighted stable-ratio bridge representation."""
    rng = as_source(rng)
    seed = rng.master_seed
    b = simulate_bridge(cfg, rng.substream(0), n_paths)
    ref = bridge_sample(0.5, cfg.ray_probs, n_ref, rng.substream(1), bridge_exponent)
    subs = [weighted_ks_report(f"fraction{i}", WeightedSample.unit(b.fractions[:, i]),
                               ref.column(i), seed)
            for i in range(cfg.num_rays) if cfg.ray_probs[i] > 0]
    lt = dithered_local_time(b, cfg, rng.substream(2).generator)
    subs.append(weighted_ks_report("local_time", WeightedSample.unit(lt),
                                   ref.column(cfg.num_rays), seed))
    return TestReport.combine("spider_bridge_weighted", subs, n_paths, seed,
                              {"p": cfg.ray_probs, "steps": cfg.steps,
                               "bridge_exponent": 0.5 if bridge_exponent is None else bridge_exponent})


# --------------------------------------------------------------------------
# exponentially killed walks


def _killed_chunk(cfg: SpiderConfig, theta: float, size: int, gen) -> SpiderPathSummary:
    lengths = gen.geometric(min(1.0, theta / cfg.steps), size).astype(np.int64)
    return _summarize(_signs(gen, int(lengths.sum())), lengths, np.asarray(cfg.ray_probs), gen)


def simulate_killed(cfg: SpiderConfig, theta: float, n_paths: int, rng=None) -> SpiderPathSummary:
    """Walks stopped at a geometric step with success probability ``theta / cfg.steps``."""
    if not theta > 0:
        raise ParameterError("theta must be positive")
    rng = as_source(rng)
    parts = map_chunks(lambda size, src: _killed_chunk(cfg, theta, size, src.generator),
                       n_paths, rng, chunk_size=max(50, int(PATHS_PER_CHUNK * min(1.0, theta))))
    return SpiderPathSummary.concat(parts)


def rank_bins(x: np.ndarray, bins: int, gen: np.random.Generator) -> np.ndarray:
    """Equal-mass bin labels by rank, breaking ties at random."""
    order = np.lexsort((gen.random(x.size), x))
    labels = np.empty(x.size, dtype=np.int64)
    labels[order] = np.arange(x.size) * bins // x.size
    return labels


def verify_lemma51(cfg: SpiderConfig, theta: float = 1.0, lam=None, n_paths: int = 20_000,
                   rng=None, bins: int = LOCAL_TIME_BINS, mass_fraction: float = 0.9) -> TestReport:
    """Conditional Laplace transform of the pre-``g`` occupation given the local time.

    Each path is killed at ``e ~ Geom(theta/n)/n``; ``g`` is its last zero.
    Given ``L_e = l``, ``E[exp(-sum_j lam_j A^j_g)] = exp(-l sum_j p_j (psi(lam_j + theta) - psi(theta)))``.
    Within equal-mass bins of ``L_e`` the per-path differences must average to
    0 within 3 SE; the check passes when such bins hold ``mass_fraction`` of the
    paths. Also tests ``L_e ~ Exp(psi(theta))``.
    """
    lam = np.zeros(cfg.num_rays) if lam is None else np.asarray(lam, dtype=float)
    if lam.shape != (cfg.num_rays,) or np.any(lam < 0):
        raise ParameterError("lam must be a non-negative vector with one entry per ray")
    rng = as_source(rng)
    seed = rng.master_seed
    s = simulate_killed(cfg, theta, n_paths, rng.substream(0))
    p = np.asarray(cfg.ray_probs)
    ell = local_time(s, cfg)
    a_g = s.time_before_last_zero @ lam / cfg.steps
    rate = float(np.sum(p * (psi(lam + theta) - psi(theta))))
    diff = np.exp(-a_g) - np.exp(-ell * rate)

    gen = rng.substream(1).generator
    labels = rank_bins(ell, bins, gen)
    rows, passed_mass, excluded = [], 0, []
    for k in range(bins):
        sel = labels == k
        if sel.sum() < MIN_BIN_PATHS:
            excluded.append(k)
            continue
        est = MCEstimate.from_samples(diff[sel])
        z = est.z_against(0.0) if est.std_error > 0 else (0.0 if est.mean == 0 else math.inf)
        ok = z <= 3.0
        passed_mass += int(sel.sum()) if ok else 0
        rows.append({"bin": k, "l_lo": float(ell[sel].min()), "l_hi": float(ell[sel].max()),
                     "count": int(sel.sum()), "mean_diff": est.mean, "se": est.std_error,
                     "z": z, "pass": ok})
    covered = passed_mass / s.zero_visits.size
    bin_report = TestReport("conditional_lt", 1.0 - covered, 1.0 - mass_fraction, n_paths, seed,
                            {"bins": bins}, {"bins": rows, "excluded_bins": excluded,
                                             "passing_mass": covered, "rate": rate})
    lt = dithered_local_time(s, cfg, rng.substream(2).generator)
    ks = ks_one_sample("local_time_exp", lt, stats.expon(scale=1.0 / float(psi(theta))).cdf, seed)
    return TestReport.combine("lemma51", [bin_report, ks], n_paths, seed,
                              {"p": cfg.ray_probs, "steps": cfg.steps, "theta": theta,
                               "lam": lam.tolist()})
