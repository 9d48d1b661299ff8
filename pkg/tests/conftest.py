import functools
import math

import numpy as np
import pytest
from scipy import integrate, stats

from tandem_aoi.analytic import SystemConfig
from tandem_aoi.distributions import ServiceDistribution
from tandem_aoi.simulator import SimConfig, simulate_actual, simulate_equivalent, summarize


def quad_weighted_moment(k: float, mean: float, gamma: float, order: int) -> float:
    """E[P^order e^{-gamma P}] for Gamma(k, mean) by adaptive quadrature.

    The integrable p^(k-1) singularity at 0 is handled with an algebraic
    weight on [0, split]; the bulk is integrated around the mode with enough
    breakpoints that narrow (large-k) densities are resolved.
    """
    theta = mean / k
    log_norm = -math.lgamma(k) - k * math.log(theta)
    sd = math.sqrt(k) * theta

    def smooth(p):  # density without the p^(k-1) factor
        return math.exp(log_norm - p / theta - gamma * p) * p**order

    def full(p):
        if p <= 0:
            return 0.0
        return math.exp(log_norm + (k - 1 + order) * math.log(p) - p / theta - gamma * p)

    lo = max(0.0, mean - 40 * sd)
    hi = mean + 60 * sd + 50 * theta
    total = 0.0
    if lo == 0.0:
        split = min(theta, mean) / 4
        total += integrate.quad(smooth, 0.0, split, weight="alg", wvar=(k - 1, 0), epsabs=1e-14, epsrel=1e-12, limit=200)[0]
        lo = split
    pts = np.linspace(lo, hi, 41)
    for x0, x1 in zip(pts[:-1], pts[1:]):
        total += integrate.quad(full, x0, x1, epsabs=1e-15, epsrel=1e-12, limit=200)[0]
    total += integrate.quad(full, hi, math.inf, epsabs=1e-15, epsrel=1e-12, limit=200)[0]
    return total


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def zero_p():
    return ServiceDistribution.deterministic(0.0)


@functools.lru_cache(maxsize=None)
def simulated(cfg, n_packets: int = 1_000_000, seed: int = 2024, model: str = "actual"):
    """(run, metrics) for a config, memoized across tests."""
    sc = SimConfig(cfg, n_packets, seed)
    run = simulate_actual(sc) if model == "actual" else simulate_equivalent(sc)
    return run, summarize(run, sc)


def se_from_halfwidth(hw: float, batches: int = 30) -> float:
    return hw / stats.t.ppf(0.995, batches - 1)


def default_point(k, mean_p, lam=0.4, b0=15.0, alpha=0.1):
    mu = math.exp(alpha * mean_p) / b0
    d = ServiceDistribution.deterministic(mean_p) if k is None else ServiceDistribution.gamma(k, mean_p)
    return SystemConfig(lam, d, mu)


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
