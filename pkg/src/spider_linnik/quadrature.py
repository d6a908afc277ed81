"""Composite Gauss-Legendre rules used by the Kanter-type integrals.

The functions ``K_alpha`` blow up like ``(1-u)**(-1/(1-alpha))`` near ``u = 1``,
so the unit interval is covered by uniform panels on ``[0, 1/2]`` and by
uniform panels in ``z = -log(1-u)`` on ``[1/2, 1 - 1e-12]``. The 2D rule is
the tensor product of this 1D rule; refinement doubles the nodes per panel.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

W_MIN = 1e-12


class QuadratureError(RuntimeError):
    """Quadrature failed to reach the requested tolerance."""

    def __init__(self, message: str, error_estimate: float):
        super().__init__(f"{message} (achieved error estimate {error_estimate:.3g})")
        self.error_estimate = error_estimate


@dataclass(frozen=True)
class QuadratureConfig:
    abs_tol: float = 1e-9
    rel_tol: float = 1e-9
    max_subdivisions: int = 2000

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")

    def converged(self, value, error) -> bool:
        return bool(np.all(np.abs(error) <= np.maximum(self.abs_tol,
                                                       self.rel_tol * np.abs(value))))


@dataclass(frozen=True)
class UnitRule:
    """Nodes on (0, 1) with ``w = 1 - u`` stored separately for precision."""

    u: np.ndarray
    w: np.ndarray
    weights: np.ndarray

    @property
    def size(self) -> int:
        return self.u.size


@lru_cache(maxsize=None)
def _gl(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, wt = np.polynomial.legendre.leggauss(n)
    return x, wt


def _panels(lo: float, hi: float, count: int, order: int):
    x, wt = _gl(order)
    edges = np.linspace(lo, hi, count + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * wt[None, :]).ravel()
    return nodes, weights


@lru_cache(maxsize=None)
def unit_rule(level: int = 0, w_min: float = W_MIN) -> UnitRule:
    """Graded rule on (0, 1); ``level`` doubles the Gauss order each step."""
    order = 8 * 2 ** level
    ua, wa = _panels(0.0, 0.5, 4, order)
    z_hi = -np.log(w_min)
    zb, wzb = _panels(np.log(2.0), z_hi, int(np.ceil(z_hi - np.log(2.0))), order)
    wb = np.exp(-zb)
    u = np.concatenate([ua, 1.0 - wb])
    w = np.concatenate([1.0 - ua, wb])
    weights = np.concatenate([wa, wzb * wb])
    return UnitRule(u, w, weights)


def log_axis_rule(y_lo: float, y_hi: float, panels: int, order: int = 16):
    """Gauss-Legendre nodes and weights in ``y`` over ``[y_lo, y_hi]``."""
    return _panels(y_lo, y_hi, panels, order)


def refine(evaluate, cfg: QuadratureConfig, start: int = 0, max_level: int = 3,
           what: str = "integral"):
    """Evaluate ``evaluate(level)`` at successive levels until two agree.

    Returns ``(value, error_estimate)``; raises :class:`QuadratureError` when
    ``max_level`` is reached without meeting the tolerance.
    """
    prev = np.asarray(evaluate(start), dtype=float)
    for level in range(start + 1, max_level + 1):
        cur = np.asarray(evaluate(level), dtype=float)
        err = np.abs(cur - prev)
        if cfg.converged(cur, err):
            return cur, err
        prev = cur
    raise QuadratureError(f"{what} did not converge by level {max_level}", float(np.max(err)))
