"""Choosing the computation/transmission split.

The mean transmission time is tied to the mean computation time through
``1/mu = b0 * exp(-alpha * E[P])``. The optimizer scans a dense grid of E[P]
values and refines the best cell with a golden-section search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, NamedTuple

import numpy as np

from .analytic import AoiAnalytics, SystemConfig, analyze
from .distributions import ServiceDistribution

DEFAULT_GRID = 512
DEFAULT_TOL = 1e-6
INV_PHI = (math.sqrt(5) - 1) / 2


@dataclass(frozen=True)
class Coupling:
    b0: float
    alpha: float
    p_min: float
    p_max: float

    def __post_init__(self):
        if not self.b0 > 0:
            raise ValueError("b0 must be positive")
        if not self.alpha >= 0:
            raise ValueError("alpha must be non-negative")
        if not 0 < self.p_min <= self.p_max:
            raise ValueError("need 0 < p_min <= p_max")

    def transmission_time(self, mean_p: float) -> float:
        return self.b0 * math.exp(-self.alpha * mean_p)

    def mu(self, mean_p: float) -> float:
        if not self.p_min <= mean_p <= self.p_max:
            raise ValueError(f"mean_p={mean_p} outside [{self.p_min}, {self.p_max}]")
        return math.exp(self.alpha * mean_p) / self.b0

    def with_alpha(self, alpha: float) -> Coupling:
        return Coupling(self.b0, alpha, self.p_min, self.p_max)


# named operating points: lambda=0.4, B0=15, alpha=0.1, E[P] in [1, 10]
PRESETS = {"paper-defaults": {"lam": 0.4, "b0": 15.0, "alpha": 0.1, "p_min": 1.0, "p_max": 10.0}}
DEFAULT_COUPLING = Coupling(15.0, 0.1, 1.0, 10.0)
DEFAULT_LAMBDA = 0.4


def mu_from_mean_p(c: Coupling, mean_p: float) -> float:
    return c.mu(mean_p)


@dataclass(frozen=True)
class Weights:
    omega1: float = 1.0
    omega2: float = 0.0

    def __post_init__(self):
        if self.omega1 < 0 or self.omega2 < 0:
            raise ValueError("weights must be non-negative")
        if not self.omega1 + self.omega2 > 0:
            raise ValueError("at least one weight must be positive")


class CurvePoint(NamedTuple):
    mean_p: float
    avg_aoi: float
    avg_peak_aoi: float
    objective: float = math.nan


class TradeoffPoint(NamedTuple):
    omega1: float
    omega2: float
    mean_p: float
    avg_aoi: float
    avg_peak_aoi: float
    objective: float


@dataclass(frozen=True)
class OptimizationResult:
    best_mean_p: float
    best_value: float
    best_analytics: AoiAnalytics
    curve: list[CurvePoint]


def make_dist(shape_k: float | None, mean_p: float) -> ServiceDistribution:
    """Gamma with the given shape, or a point mass when ``shape_k`` is None."""
    if shape_k is None:
        return ServiceDistribution.deterministic(mean_p)
    return ServiceDistribution.gamma(shape_k, mean_p)


def config_at(c: Coupling, shape_k: float | None, lam: float, mean_p: float) -> SystemConfig:
    return SystemConfig(lam, make_dist(shape_k, mean_p), c.mu(mean_p))


def objective(cfg: SystemConfig, w: Weights) -> float:
    a = analyze(cfg)
    return w.omega1 * a.avg_aoi + w.omega2 * a.avg_peak_aoi


def golden_section(f: Callable[[float], float], lo: float, hi: float, tol: float = DEFAULT_TOL) -> tuple[float, float]:
    """Minimize a unimodal ``f`` on [lo, hi] to bracket width ``tol``."""
    x1 = hi - INV_PHI * (hi - lo)
    x2 = lo + INV_PHI * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > tol:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - INV_PHI * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + INV_PHI * (hi - lo)
            f2 = f(x2)
    return (x1, f1) if f1 <= f2 else (x2, f2)


def optimize(
    c: Coupling,
    shape_k: float | None,
    lam: float,
    w: Weights,
    grid: int = DEFAULT_GRID,
    tol: float = DEFAULT_TOL,
) -> OptimizationResult:
    """Minimize ``omega1 * avg_aoi + omega2 * avg_peak_aoi`` over E[P].

    Ties go to the smaller E[P]. The returned point is never worse than any
    grid point, and the bracket ends are checked so a boundary optimum comes
    back exactly on the bound.
    """
    xs = np.linspace(c.p_min, c.p_max, grid) if grid > 1 else np.array([c.p_min])
    curve = []
    for x in xs.tolist():
        a = analyze(config_at(c, shape_k, lam, x))
        curve.append(CurvePoint(x, a.avg_aoi, a.avg_peak_aoi, w.omega1 * a.avg_aoi + w.omega2 * a.avg_peak_aoi))
    vals = [p.objective for p in curve]
    j = int(np.argmin(vals))  # first occurrence: smaller mean_p wins ties
    best_x, best_f = curve[j].mean_p, vals[j]

    if grid > 1:
        lo = xs[max(j - 1, 0)]
        hi = xs[min(j + 1, grid - 1)]

        def f(x: float) -> float:
            return objective(config_at(c, shape_k, lam, x), w)

        x_g, f_g = golden_section(f, float(lo), float(hi), tol)
        if f_g < best_f:
            best_x, best_f = x_g, f_g
        # a boundary optimum should land on the bound itself
        for edge in (float(lo), float(hi)):
            if edge in (c.p_min, c.p_max):
                f_e = f(edge)
                if f_e < best_f or (f_e == best_f and edge < best_x):
                    best_x, best_f = edge, f_e

    best = analyze(config_at(c, shape_k, lam, best_x))
    return OptimizationResult(best_x, best_f, best, curve)


def sweep_mean_p(c: Coupling, shape_k: float | None, lam: float, grid: int = 91) -> list[CurvePoint]:
    xs = np.linspace(c.p_min, c.p_max, grid) if grid > 1 else np.array([c.p_min])
    out = []
    for x in xs.tolist():
        a = analyze(config_at(c, shape_k, lam, x))
        out.append(CurvePoint(x, a.avg_aoi, a.avg_peak_aoi))
    return out


def sweep_alpha(
    c: Coupling,
    alphas: Iterable[float],
    shape_k: float | None,
    lam: float,
    w: Weights = Weights(1.0, 0.0),
    grid: int = DEFAULT_GRID,
) -> list[tuple[float, float, float]]:
    """(alpha, best E[P], best objective) for each alpha."""
    out = []
    for alpha in alphas:
        r = optimize(c.with_alpha(alpha), shape_k, lam, w, grid=grid)
        out.append((float(alpha), r.best_mean_p, r.best_value))
    return out


def tradeoff_frontier(
    c: Coupling,
    shape_k: float | None,
    lam: float,
    n_weights: int = 21,
    grid: int = DEFAULT_GRID,
    dedup_tol: float = 1e-9,
) -> list[TradeoffPoint]:
    """Weighted-sum optima for omega1 = t, omega2 = 1 - t on a uniform t grid.

    Points with the same E[P] (within ``dedup_tol``) are merged; the result is
    sorted by average AoI.
    """
    if n_weights < 2:
        raise ValueError("n_weights must be at least 2")
    pts: list[TradeoffPoint] = []
    for t in np.linspace(0.0, 1.0, n_weights).tolist():
        w = Weights(t, 1.0 - t)
        r = optimize(c, shape_k, lam, w, grid=grid)
        if any(abs(p.mean_p - r.best_mean_p) <= dedup_tol for p in pts):
            continue
        a = r.best_analytics
        pts.append(TradeoffPoint(t, 1.0 - t, r.best_mean_p, a.avg_aoi, a.avg_peak_aoi, r.best_value))
    pts.sort(key=lambda p: (p.avg_aoi, p.avg_peak_aoi))
    return pts


def variance_sweep(
    c: Coupling,
    ks: Iterable[float],
    lam: float,
    fixed_mean_p: float = 4.0,
    grid: int = DEFAULT_GRID,
) -> list[dict]:
    """Average and peak age per shape k: at a fixed E[P] and at each optimum."""
    rows = []
    for k in ks:
        fixed = analyze(config_at(c, k, lam, fixed_mean_p))
        best_aoi = optimize(c, k, lam, Weights(1.0, 0.0), grid=grid)
        best_peak = optimize(c, k, lam, Weights(0.0, 1.0), grid=grid)
        rows.append(
            {
                "k": float(k),
                "fixed_mean_p": float(fixed_mean_p),
                "avg_aoi_fixed": fixed.avg_aoi,
                "avg_peak_aoi_fixed": fixed.avg_peak_aoi,
                "opt_mean_p_aoi": best_aoi.best_mean_p,
                "opt_avg_aoi": best_aoi.best_value,
                "opt_mean_p_peak": best_peak.best_mean_p,
                "opt_avg_peak_aoi": best_peak.best_value,
            }
        )
    return rows
