"""Monte-Carlo estimates, weighted samples and serializable test reports."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable

import numpy as np

REPORT_SCHEMA = 1


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    std_error: float
    n: int

    @classmethod
    def from_samples(cls, values) -> "MCEstimate":
        v = np.asarray(values, dtype=float)
        n = v.size
        se = float(v.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        return cls(float(v.mean()), se, n)

    @classmethod
    def from_weighted(cls, values, weights) -> "MCEstimate":
        """Self-normalized mean with the delta-method standard error."""
        v = np.asarray(values, dtype=float)
        w = np.asarray(weights, dtype=float)
        wn = w / w.sum()
        mean = float(wn @ v)
        se = float(math.sqrt(np.sum(wn ** 2 * (v - mean) ** 2)))
        return cls(mean, se, v.size)

    @classmethod
    def pool(cls, estimates: Iterable["MCEstimate"]) -> "MCEstimate":
        """Sample-size weighted pooling of independent chunk estimates."""
        est = list(estimates)
        total = sum(e.n for e in est)
        mean = math.fsum(e.n * e.mean for e in est) / total
        se = math.sqrt(math.fsum((e.n * e.std_error) ** 2 for e in est)) / total
        return cls(mean, se, total)

    def scaled(self, c: float) -> "MCEstimate":
        return MCEstimate(c * self.mean, abs(c) * self.std_error, self.n)

    def z_against(self, other: "MCEstimate | float") -> float:
        if isinstance(other, MCEstimate):
            diff = self.mean - other.mean
            se = math.hypot(self.std_error, other.std_error)
        else:
            diff = self.mean - float(other)
            se = self.std_error
        if se == 0:
            return 0.0 if diff == 0 else math.inf
        return abs(diff) / se


@dataclass
class WeightedSample:
    """A batch of sampled points with positive importance weights.

    ``values`` has shape ``(n,)`` or ``(n, d)``; ``weights`` has shape ``(n,)``.
    Means are self-normalized, so weights only matter up to a constant.
    """

    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape != (self.values.shape[0],):
            raise ValueError("weights must be one per sampled point")
        if not np.all(np.isfinite(self.weights)) or np.any(self.weights <= 0):
            raise ValueError("weights must be finite and strictly positive")

    @classmethod
    def unit(cls, values) -> "WeightedSample":
        values = np.asarray(values, dtype=float)
        return cls(values, np.ones(values.shape[0]))

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def normalized_weights(self) -> np.ndarray:
        return self.weights / self.weights.sum()

    @property
    def ess(self) -> float:
        w = self.weights
        return float(w.sum() ** 2 / np.sum(w * w))

    def column(self, i: int) -> "WeightedSample":
        return WeightedSample(self.values[:, i], self.weights)

    def map(self, fn: Callable[[np.ndarray], np.ndarray]) -> "WeightedSample":
        return WeightedSample(fn(self.values), self.weights)

    def mean(self, fn: Callable[[np.ndarray], np.ndarray] | None = None) -> MCEstimate:
        v = self.values if fn is None else fn(self.values)
        return MCEstimate.from_weighted(v, self.weights)


def _jsonable(x: Any) -> Any:
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (np.floating, float)):
        f = float(x)
        return f if math.isfinite(f) else str(f)
    if isinstance(x, MCEstimate):
        return {"mean": x.mean, "std_error": x.std_error, "n": x.n}
    return x


@dataclass
class TestReport:
    """Verdict of one identity test; ``passed`` iff ``statistic <= threshold``."""

    __test__ = False  # not a pytest class

    identity_id: str
    statistic: float
    threshold: float
    n: int
    seed: int
    params: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)
    subtests: list["TestReport"] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.statistic <= self.threshold)

    @classmethod
    def combine(cls, identity_id: str, subtests: list["TestReport"], n: int, seed: int,
                params: dict | None = None, details: dict | None = None) -> "TestReport":
        """Composite report: statistic is the worst statistic/threshold ratio."""
        ratios = [_ratio(s.statistic, s.threshold) for s in subtests]
        return cls(identity_id, max(ratios, default=0.0), 1.0, n, seed,
                   params or {}, details or {}, subtests)

    def to_dict(self) -> dict:
        out = {
            "schema": REPORT_SCHEMA,
            "identity_id": self.identity_id,
            "params": self.params,
            "n": self.n,
            "seed": self.seed,
            "statistic": self.statistic,
            "threshold": self.threshold,
            "pass": self.passed,
            "details": self.details,
        }
        if self.subtests:
            out["subtests"] = [s.to_dict() for s in self.subtests]
        return _jsonable(out)

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def rows(self, prefix: str | None = None) -> list[dict]:
        """Flattened leaf rows for the CSV summary."""
        name = self.identity_id if prefix is None else f"{prefix}/{self.identity_id}"
        if not self.subtests:
            return [{"identity_id": name, "statistic": self.statistic,
                     "threshold": self.threshold, "pass": self.passed,
                     "n": self.n, "seed": self.seed}]
        rows = []
        for s in self.subtests:
            rows.extend(s.rows(name))
        return rows

    def summary_line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] {self.identity_id}: statistic={self.statistic:.4g} threshold={self.threshold:.4g}"


def _ratio(stat: float, thr: float) -> float:
    if thr > 0:
        return stat / thr
    return 0.0 if stat <= thr else math.inf
