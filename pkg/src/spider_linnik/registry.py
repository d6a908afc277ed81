"""Registered identity checks: ``identity_id -> (runner, default params, default n)``."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from . import spider_sim
from .identities import catalog
from .identities.engine import ConfigurationError
from .rng import RandomSource
from .samplers import EXAMPLE1, EXAMPLE2, LinnikSpec


@dataclass(frozen=True)
class Entry:
    run: Callable[[dict, int, RandomSource], object]
    defaults: dict
    n: int
    description: str


def _spec(p: dict) -> LinnikSpec:
    mu = p["mu"] if p.get("mu") is not None else (1.0,) * len(p["nu"])
    return LinnikSpec(float(p["alpha"]), tuple(mu), tuple(p["nu"]), float(p.get("t", 1.0)))


def _spider(p: dict) -> spider_sim.SpiderConfig:
    return spider_sim.SpiderConfig.of(p["p"], steps=int(p["steps"]))


def _example_lt(base: LinnikSpec, identity_id: str):
    def run(p, n, rng):
        return catalog.verify_linnik_laplace(base.with_t(float(p["t"])), n, rng,
                                             lambda_grid=p["lambdas"], identity_id=identity_id)
    return run


REGISTRY: dict[str, Entry] = {
    "example1_lt": Entry(_example_lt(EXAMPLE1, "example1_lt"), {"t": 1.0, "lambdas": [0.5, 1.0, 2.0]}, 1_000_000,
                   "Laplace transform of the first example marginal"),
    "example2_lt": Entry(_example_lt(EXAMPLE2, "example2_lt"), {"t": 1.0, "lambdas": [0.5, 1.0, 2.0]}, 1_000_000,
                   "Laplace transform of the second example marginal"),
    "thm2": Entry(lambda p, n, rng: catalog.verify_theorem2(p["alpha"], p["nu"], p["t"], p["m"], n, rng),
                  {"alpha": 0.5, "nu": [0.25, 0.25], "t": 1.0, "m": 1.0}, 1_000_000,
                  "tilted-stable vector at gamma time vs weighted stable representation"),
    "cor1": Entry(lambda p, n, rng: catalog.verify_corollary1(p["alpha"], p["nu"], p["t"], n, rng),
                  {"alpha": 0.5, "nu": [0.25, 0.25], "t": 1.0}, 100_000,
                  "gamma law, independence and normalized law"),
    "prop_marginals": Entry(
        lambda p, n, rng: catalog.verify_prop_marginals(
            p["example"], {k: p[k] for k in ("alpha", "mu", "nu") if p.get(k) is not None},
            p["t"], n, rng),
        {"example": 1, "t": 1.0, "alpha": None, "mu": None, "nu": None}, 100_000,
        "Linnik marginal vs explicit representations"),
    "levy_limit": Entry(lambda p, n, rng: catalog.verify_levy_limit(_spec(p), p["t_small"], n, rng),
                        {"alpha": 0.5, "mu": [0.25, 0.0], "nu": [0.25, 0.25], "t_small": 0.01},
                        1_000_000, "small-t generator limit vs Levy measure"),
    "levy_exponent": Entry(lambda p, n, rng: catalog.verify_levy_exponent(
        _spec(p), p["lambdas"], rng, mc_n=n),
        {"alpha": 0.5, "mu": [0.25, 0.0], "nu": [0.25, 0.25], "lambdas": [0.5, 1.0, 2.0]},
        200_000, "Levy exponent identity"),
    "section4": Entry(lambda p, n, rng: catalog.verify_section4(
        p["alpha"], p["p"], n, rng, p["bridge_exponent"]),
        {"alpha": 0.5, "p": [0.5, 0.5], "bridge_exponent": None}, 100_000,
        "tilted components at exponential time vs bridge representation"),
    "bridge_normalization": Entry(lambda p, n, rng: catalog.verify_bridge_normalization(
        p["alpha"], p["p"], n, rng), {"alpha": 0.5, "p": [0.5, 0.5]}, 1_000_000,
        "normalizing constants of both candidate bridge weights"),
    "kanter_density": Entry(lambda p, n, rng: catalog.verify_kanter_density(p["alphas"], p["s"]),
                            {"alphas": [0.3, 0.5, 0.7], "s": [0.25, 1.0, 4.0]}, 0,
                            "Kanter density mass and closed form"),
    "h_moment": Entry(lambda p, n, rng: catalog.verify_h_moment(p["alphas"], p["ts"]),
                      {"alphas": [0.3, 0.5, 0.7], "ts": [0.5, 1.0, 2.0]}, 0,
                      "moment identity of the conditional mean h"),
    "spider_arcsine": Entry(lambda p, n, rng: spider_sim.verify_arcsine(_spider(p), n, rng),
                            {"p": [0.5, 0.5], "steps": 10_000}, 10_000,
                            "walk occupation vs arcsine law"),
    "spider_theorem1": Entry(lambda p, n, rng: spider_sim.verify_theorem1(_spider(p), n, rng),
                             {"p": [0.75, 0.25], "steps": 10_000}, 10_000,
                             "walk occupation and local time vs stable-ratio representation"),
    "spider_martingale": Entry(lambda p, n, rng: spider_sim.verify_martingale(_spider(p), n, rng),
                               {"p": [0.5, 0.5], "steps": 10_000}, 100_000,
                               "local-time calibration |S| - L"),
    "spider_bridge_uniform": Entry(lambda p, n, rng: spider_sim.verify_bridge_uniform(
        _spider(p), n, rng, p["method"]), {"p": [0.5, 0.5], "steps": 10_000,
                                           "method": "exchangeable"}, 10_000,
        "walk bridge occupation vs uniform law"),
    "spider_bridge_weighted": Entry(lambda p, n, rng: spider_sim.verify_bridge_weighted(
        _spider(p), n, rng, bridge_exponent=p["bridge_exponent"]),
        {"p": [0.75, 0.25], "steps": 10_000, "bridge_exponent": None}, 10_000,
        "walk bridge vs reweighted representation"),
    "lemma51": Entry(lambda p, n, rng: spider_sim.verify_lemma51(
        _spider(p), p["theta"], p["lam"] if p["lam"] is not None else [1.0] + [0.0] * (len(p["p"]) - 1),
        n, rng), {"p": [0.5, 0.5], "steps": 10_000, "theta": 1.0, "lam": None}, 20_000,
        "killed walk: conditional Laplace transform given local time"),
}


def resolve(identity_id: str, params: dict | None = None) -> tuple[Entry, dict]:
    """Entry and merged params; unknown ids or keys raise :class:`ConfigurationError`."""
    if identity_id not in REGISTRY:
        raise ConfigurationError(f"unknown identity_id {identity_id!r}; "
                                 f"known: {', '.join(sorted(REGISTRY))}")
    entry = REGISTRY[identity_id]
    params = dict(params or {})
    unknown = set(params) - set(entry.defaults)
    if unknown:
        raise ConfigurationError(f"{identity_id}: unknown parameter(s) {sorted(unknown)}; "
                                 f"accepted: {sorted(entry.defaults)}")
    return entry, {**entry.defaults, **params}


def run_identity(identity_id: str, params: dict | None, n: int | None, rng: RandomSource):
    entry, merged = resolve(identity_id, params)
    report = entry.run(merged, entry.n if n is None else int(n), rng)
    report.identity_id = identity_id
    report.details.setdefault("stream", list(rng.spawn_key))
    report.params = {**merged, **report.params}
    return report
