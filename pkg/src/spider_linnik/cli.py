"""Command-line entry point (``spider-linnik`` / ``python -m spider_linnik``).

Exit codes: 0 pass, 1 statistical failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from contextlib import contextmanager
from itertools import product
from pathlib import Path

import numpy as np

from . import analytic, samplers, spider_sim
from .estimates import REPORT_SCHEMA, TestReport
from .identities.engine import ConfigurationError
from .quadrature import QuadratureError
from .registry import REGISTRY, resolve, run_identity
from .rng import RandomSource, SeedError, default_seed, set_threads

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _fmt(x) -> str:
    return format(float(x), ".17g")


@contextmanager
def _output(path: str | None):
    if path in (None, "-"):
        yield sys.stdout
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            yield fh


def _param_label(**params) -> str:
    parts = []
    for k, v in params.items():
        if v is None:
            continue
        v = "|".join(_fmt(x) for x in v) if isinstance(v, (tuple, list)) else _fmt(v)
        parts.append(f"{k}={v}")
    return ";".join(parts)


# --------------------------------------------------------------------------
# sample


def _need(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"{args.dist} needs --{', --'.join(m.replace('_', '-') for m in missing)}")


def _draw_law(args, gen: np.random.Generator):
    d, n = args.dist, args.n
    if d == "stable":
        _need(args, "alpha")
        return [f"stable({_param_label(alpha=args.alpha)})"], samplers.sample_stable(args.alpha, gen, n)[:, None]
    if d == "tilted_stable":
        _need(args, "alpha", "nu")
        spec = samplers.TiltSpec(args.alpha, args.nu[0], args.u)
        return ([f"tilted_stable({_param_label(alpha=args.alpha, nu=args.nu[0], u=args.u)})"],
                samplers.sample_tilted_stable(spec, gen, n)[:, None])
    if d in ("linnik", "linnik_vector"):
        _need(args, "alpha", "nu")
        mu = args.mu if args.mu is not None else (1.0,) * len(args.nu)
        spec = samplers.LinnikSpec(args.alpha, mu, args.nu, args.t)
        comps, _ = samplers.sample_linnik_marginal(spec, gen, n)
        label = _param_label(alpha=args.alpha, mu=mu, nu=args.nu, t=args.t)
        if d == "linnik":
            return [f"linnik({label})"], (comps @ np.asarray(mu))[:, None]
        return [f"linnik_vector({label})[{i}]" for i in range(spec.n)], comps
    if d in ("example1", "example2"):
        fn = samplers.sample_exact_marginal_example1 if d == "example1" else samplers.sample_exact_marginal_example2
        return [f"{d}({_param_label(t=args.t)})"], fn(args.t, gen, n)[:, None]
    if d == "lamperti_ratio":
        _need(args, "alpha")
        return [f"lamperti_ratio({_param_label(alpha=args.alpha)})"], samplers.sample_lamperti_ratio(args.alpha, gen, n)[:, None]
    if d == "spider_occupation":
        _need(args, "alpha", "p")
        a, inv = samplers.sample_spider_occupation(args.alpha, args.p, gen, n)
        label = _param_label(alpha=args.alpha, p=args.p)
        cols = [f"spider_occupation({label})[A{i}]" for i in range(a.shape[1])]
        return cols + [f"spider_occupation({label})[L_pow]"], np.column_stack([a, inv])
    raise UsageError(f"unknown law {d!r}")


def cmd_sample(args) -> int:
    if args.n < 1:
        raise UsageError("--n must be positive")
    gen = RandomSource(args.seed).generator
    header, values = _draw_law(args, gen)
    with _output(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in values:
            w.writerow([_fmt(x) for x in row])
    return EXIT_PASS


# --------------------------------------------------------------------------
# density / levy


def cmd_density(args) -> int:
    x = np.asarray(args.x, dtype=float)
    kind = args.kind
    if kind in ("stable", "stable_cdf", "lamperti", "lamperti_cdf", "h"):
        _need(args, "alpha")
    if kind == "stable":
        y = analytic.stable_density(args.alpha, x)
    elif kind == "stable_cdf":
        y = analytic.stable_cdf(args.alpha, x)
    elif kind == "lamperti":
        y = analytic.lamperti_density(args.alpha, x)
    elif kind == "lamperti_cdf":
        y = analytic.lamperti_cdf(args.alpha, x)
    elif kind == "h":
        y = analytic.h_alpha_t(args.alpha, args.t, x)
    elif kind == "linnik_laplace":
        _need(args, "alpha", "nu")
        mu = args.mu if args.mu is not None else (1.0,) * len(args.nu)
        y = analytic.linnik_laplace(samplers.LinnikSpec(args.alpha, mu, args.nu, args.t), x)
    else:
        raise UsageError(f"unknown density kind {kind!r}")
    with _output(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", kind])
        for xi, yi in zip(x, np.broadcast_to(y, x.shape)):
            w.writerow([_fmt(xi), _fmt(yi)])
    return EXIT_PASS


def cmd_levy(args) -> int:
    _need(args, "alpha", "nu")
    mu = args.mu if args.mu is not None else (1.0,) * len(args.nu)
    spec = samplers.LinnikSpec(args.alpha, mu, args.nu, 1.0)
    src = RandomSource(args.seed)
    with _output(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "levy_density", "std_error"])
        for k, x in enumerate(args.x):
            est = analytic.levy_density(analytic.LevyQuery(spec, x, args.mc_n), src.substream(k))
            w.writerow([_fmt(x), _fmt(est.mean), _fmt(est.std_error)])
    return EXIT_PASS


# --------------------------------------------------------------------------
# verify / suite

VERIFY_FLAGS = ("alpha", "mu", "nu", "t", "m", "p", "theta", "lam", "example", "t_small",
                "bridge_exponent", "steps", "method")


def _coerce(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        if "," in text:
            return [_coerce(x) for x in text.split(",")]
        return text


def _verify_params(args) -> dict:
    params = {}
    for name in VERIFY_FLAGS:
        v = getattr(args, name, None)
        if v is not None:
            params[name] = list(v) if isinstance(v, tuple) else v
    for item in args.param or ():
        if "=" not in item:
            raise UsageError(f"--param expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        params[k.strip()] = _coerce(v.strip())
    if "example" in params and str(params["example"]) in ("1", "2", "3"):
        params["example"] = int(params["example"])
    return params


def _write_report(report: TestReport, path: str | None):
    with _output(path) as fh:
        fh.write(report.to_json(indent=2))
        fh.write("\n")


def cmd_verify(args) -> int:
    params = _verify_params(args)
    resolve(args.identity_id, params)  # validate before any work
    report = run_identity(args.identity_id, params, args.n, RandomSource(args.seed))
    _write_report(report, args.out)
    print(report.summary_line(), file=sys.stderr)
    return EXIT_PASS if report.passed else EXIT_FAIL


SUITE_KEYS = {"master_seed", "output_path", "format", "identities"}
ITEM_KEYS = {"identity_id", "params", "n", "t_values", "alpha_values"}


def load_suite(path) -> dict:
    """Parse and validate a suite config; raises :class:`ConfigurationError`."""
    try:
        with open(path, "rb") as fh:
            cfg = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"{path}: malformed TOML: {exc}") from exc
    except OSError as exc:
        raise ConfigurationError(f"cannot read suite config: {exc}") from exc
    extra = set(cfg) - SUITE_KEYS
    if extra:
        raise ConfigurationError(f"{path}: unknown top-level key(s) {sorted(extra)}")
    fmt = cfg.get("format", "json")
    if fmt not in ("json", "csv"):
        raise ConfigurationError(f"{path}: format must be 'json' or 'csv', got {fmt!r}")
    runs = []
    for k, item in enumerate(cfg.get("identities", [])):
        if not isinstance(item, dict) or "identity_id" not in item:
            raise ConfigurationError(f"{path}: identities[{k}] needs an identity_id")
        extra = set(item) - ITEM_KEYS
        if extra:
            raise ConfigurationError(f"{path}: identities[{k}] has unknown key(s) {sorted(extra)}")
        iid = item["identity_id"]
        base = dict(item.get("params", {}))
        grids = []
        for key, grid_key in (("t", "t_values"), ("alpha", "alpha_values")):
            if grid_key in item:
                grids.append([(key, v) for v in item[grid_key]])
        for combo in product(*grids) if grids else [()]:
            params = {**base, **dict(combo)}
            resolve(iid, params)
            runs.append({"identity_id": iid, "params": params, "n": item.get("n")})
    seed = cfg.get("master_seed", default_seed())
    return {"master_seed": int(seed), "output_path": cfg.get("output_path", "suite_report.json"),
            "format": fmt, "runs": runs}


def run_suite(cfg: dict, output_path: str | None = None, log=None) -> list[TestReport]:
    out = Path(output_path or cfg["output_path"])
    reports = []
    for k, run in enumerate(cfg["runs"]):
        rep = run_identity(run["identity_id"], run["params"], run["n"],
                           RandomSource(cfg["master_seed"], stream_index=k))
        reports.append(rep)
        if log:
            print(f"{k}: {rep.summary_line()}", file=log, flush=True)
    rows = []
    for k, rep in enumerate(reports):
        for row in rep.rows():
            rows.append({"run": k, **row})
    stem = out.with_suffix("")
    summary = out if cfg["format"] == "csv" else stem.parent / f"{stem.name}_summary.csv"
    reports_path = out if cfg["format"] == "json" else stem.parent / f"{stem.name}_reports.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(summary, "w", newline="") as fh:
        w = csv.DictWriter(fh, ["run", "identity_id", "statistic", "threshold", "pass", "n", "seed"],
                           lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    with open(reports_path, "w") as fh:
        json.dump({"schema": REPORT_SCHEMA, "master_seed": cfg["master_seed"],
                   "reports": [r.to_dict() for r in reports]}, fh, indent=2)
    return reports


def cmd_suite(args) -> int:
    cfg = load_suite(args.config)
    if args.seed is not None:
        cfg["master_seed"] = args.seed
    reports = run_suite(cfg, args.out, log=sys.stderr)
    return EXIT_PASS if all(r.passed for r in reports) else EXIT_FAIL


# --------------------------------------------------------------------------
# spider


def cmd_spider(args) -> int:
    cfg = spider_sim.SpiderConfig.of(args.p, steps=args.steps)
    src = RandomSource(args.seed)
    if args.mode == "free":
        s = spider_sim.simulate_spider(cfg, src, args.n_paths)
    elif args.mode == "bridge":
        s = spider_sim.simulate_bridge(cfg, src, args.n_paths, method=args.method)
    else:
        s = spider_sim.simulate_killed(cfg, args.theta, args.n_paths, src)
    if args.out in (None, "-"):
        raise UsageError("spider needs --out for the CSV path")
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    s.to_csv(args.out)
    lt = spider_sim.local_time(s, cfg)
    print(f"{len(s)} paths, mean local time {lt.mean():.4f}", file=sys.stderr)
    return EXIT_PASS


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spider-linnik",
                                 description="Linnik/tilted-stable samplers and identity checks.")
    ap.add_argument("--threads", type=int, default=None,
                    help="worker threads (default: available cores)")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, seed=True, out=True):
        if seed:
            p.add_argument("--seed", type=int, default=None,
                           help="master seed (default: $SPIDER_LINNIK_SEED or built-in)")
        if out:
            p.add_argument("--out", default=None, help="output file ('-' = stdout)")

    def law(p):
        p.add_argument("--alpha", type=float)
        p.add_argument("--mu", type=_floats)
        p.add_argument("--nu", type=_floats)
        p.add_argument("--t", type=float, default=None)

    p = sub.add_parser("sample", help="write draws of a registered law as CSV")
    p.add_argument("dist", choices=["stable", "tilted_stable", "linnik", "linnik_vector",
                                    "example1", "example2", "lamperti_ratio", "spider_occupation"])
    law(p)
    p.add_argument("--u", type=float, default=1.0, help="time for tilted_stable")
    p.add_argument("--p", type=_floats)
    p.add_argument("--n", type=int, default=1000)
    common(p)
    p.set_defaults(func=cmd_sample, t_default=1.0)

    p = sub.add_parser("density", help="evaluate densities / transforms at points")
    p.add_argument("kind", choices=["stable", "stable_cdf", "lamperti", "lamperti_cdf", "h",
                                    "linnik_laplace"])
    law(p)
    p.add_argument("--x", type=_floats, required=True)
    common(p, seed=False)
    p.set_defaults(func=cmd_density, t_default=1.0)

    p = sub.add_parser("levy", help="Levy density of mu . C(gamma_t) (sum(nu**alpha) = 1)")
    law(p)
    p.add_argument("--x", type=_floats, required=True)
    p.add_argument("--mc-n", type=int, default=100_000)
    common(p)
    p.set_defaults(func=cmd_levy, t_default=1.0)

    p = sub.add_parser("verify", help="run one identity check and write its JSON report")
    p.add_argument("identity_id")
    law(p)
    p.add_argument("--m", type=float)
    p.add_argument("--p", type=_floats)
    p.add_argument("--theta", type=float)
    p.add_argument("--lam", type=_floats)
    p.add_argument("--example")
    p.add_argument("--t-small", type=float)
    p.add_argument("--bridge-exponent", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--method")
    p.add_argument("--param", action="append", metavar="KEY=VALUE",
                   help="extra parameter (JSON or comma-separated values)")
    p.add_argument("--n", type=int, default=None)
    common(p)
    p.set_defaults(func=cmd_verify, t_default=None)

    p = sub.add_parser("suite", help="run a TOML suite; writes JSON reports and a CSV summary")
    p.add_argument("config")
    common(p)
    p.set_defaults(func=cmd_suite)

    p = sub.add_parser("spider", help="simulate spider walks and export path summaries")
    p.add_argument("--p", type=_floats, required=True)
    p.add_argument("--steps", type=int, default=10_000)
    p.add_argument("--n-paths", type=int, default=1000)
    p.add_argument("--mode", choices=["free", "bridge", "killed"], default="free")
    p.add_argument("--method", choices=["exchangeable", "rejection"], default="exchangeable")
    p.add_argument("--theta", type=float, default=1.0)
    common(p)
    p.set_defaults(func=cmd_spider)

    ap.epilog = "identities: " + ", ".join(REGISTRY)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    set_threads(args.threads if args.threads else os.cpu_count() or 1)
    if hasattr(args, "t") and args.t is None and getattr(args, "t_default", None) is not None:
        args.t = args.t_default
    try:
        if getattr(args, "seed", "absent") is None and args.command != "suite":
            args.seed = default_seed()
        return args.func(args)
    except (UsageError, ConfigurationError, samplers.ParameterError, QuadratureError,
            SeedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
