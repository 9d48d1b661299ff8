"""Computation-time laws and the seeded random streams used by the simulator.

Only three kinds are supported: Gamma (parameterized by its mean and shape),
deterministic, and exponential. Exponential is a Gamma with shape 1 and is
stored that way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

GAMMA = "gamma"
DETERMINISTIC = "deterministic"
EXPONENTIAL = "exponential"
KINDS = (GAMMA, DETERMINISTIC, EXPONENTIAL)


@dataclass(frozen=True)
class ServiceDistribution:
    """Law of the computation time P.

    ``shape_k`` is only meaningful for Gamma; the Gamma density with mean m and
    shape k has rate k/m, so the variance is m**2 / k.
    """

    kind: str
    mean: float
    shape_k: float = 1.0

    def __post_init__(self):
        if self.kind not in (GAMMA, DETERMINISTIC):
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        if not math.isfinite(self.mean):
            raise ValueError("mean must be finite")
        if self.kind == GAMMA and self.mean <= 0:
            raise ValueError("gamma mean must be > 0")
        if self.kind == DETERMINISTIC and self.mean < 0:
            raise ValueError("deterministic value must be >= 0")
        if not self.shape_k > 0:
            raise ValueError("shape_k must be > 0")

    @classmethod
    def gamma(cls, k: float, mean: float) -> ServiceDistribution:
        return cls(GAMMA, float(mean), float(k))

    @classmethod
    def exponential(cls, mean: float) -> ServiceDistribution:
        return cls(GAMMA, float(mean), 1.0)

    @classmethod
    def deterministic(cls, value: float) -> ServiceDistribution:
        return cls(DETERMINISTIC, float(value), 1.0)

    @classmethod
    def from_kind(cls, kind: str, mean: float, k: float | None = None) -> ServiceDistribution:
        """Build from a config-style ``kind`` name (``gamma`` needs ``k``)."""
        if kind == GAMMA:
            if k is None:
                raise ValueError("gamma distribution needs a shape k")
            return cls.gamma(k, mean)
        if kind == EXPONENTIAL:
            return cls.exponential(mean)
        if kind == DETERMINISTIC:
            return cls.deterministic(mean)
        raise ValueError(f"unknown distribution kind {kind!r}")

    @property
    def rate(self) -> float:
        """Rate 1/E[P] (infinite for a point mass at zero)."""
        return math.inf if self.mean == 0 else 1.0 / self.mean

    def second_moment(self) -> float:
        if self.kind == DETERMINISTIC:
            return self.mean**2
        return self.mean**2 * (1.0 + 1.0 / self.shape_k)

    def variance(self) -> float:
        return self.second_moment() - self.mean**2

    def weighted_moment(self, gamma: float, order: int) -> float:
        """E[P**order * exp(-gamma * P)] for order in {0, 1, 2}.

        For Gamma this is (k)_n * theta**n * (1 + gamma*theta)**-(k+n) with
        theta = mean/k, evaluated in log space so huge k does not overflow.
        """
        if gamma < 0 or math.isnan(gamma):
            raise ValueError(f"gamma must be >= 0, got {gamma}")
        if order not in (0, 1, 2):
            raise ValueError("order must be 0, 1 or 2")
        if self.kind == DETERMINISTIC:
            c = self.mean
            if c == 0:
                return 1.0 if order == 0 else 0.0
            return c**order * math.exp(-gamma * c)
        k = self.shape_k
        theta = self.mean / k
        if theta == 0.0:  # mean underflowed; point mass at zero
            return 1.0 if order == 0 else 0.0
        rising = 1.0
        for j in range(order):
            rising *= k + j
        log_val = order * math.log(theta) - (k + order) * math.log1p(gamma * theta)
        return rising * math.exp(log_val)

    def mgf_at(self, gamma: float) -> float:
        """E[exp(-gamma P)]."""
        return self.weighted_moment(gamma, 0)

    def mgf_deriv_at(self, gamma: float) -> float:
        """E[P exp(-gamma P)], the MGF derivative evaluated at -gamma."""
        return self.weighted_moment(gamma, 1)

    def mgf_second_deriv_at(self, gamma: float) -> float:
        """E[P**2 exp(-gamma P)]."""
        return self.weighted_moment(gamma, 2)

    def sample(self, stream: np.random.Generator) -> float:
        return float(self.sample_many(stream, 1)[0])

    def sample_many(self, stream: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == DETERMINISTIC:
            return np.full(n, self.mean)
        return stream.gamma(self.shape_k, self.mean / self.shape_k, size=n)

    def describe(self) -> dict:
        out = {"kind": self.kind, "mean": self.mean}
        if self.kind == GAMMA:
            out["k"] = self.shape_k
        return out


# Free-function spellings of the distribution operations.
def mean(d: ServiceDistribution) -> float:
    return d.mean


def second_moment(d: ServiceDistribution) -> float:
    return d.second_moment()


def mgf_at(d: ServiceDistribution, gamma: float) -> float:
    return d.mgf_at(gamma)


def mgf_deriv_at(d: ServiceDistribution, gamma: float) -> float:
    return d.mgf_deriv_at(gamma)


def sample(d: ServiceDistribution, stream: np.random.Generator) -> float:
    return d.sample(stream)


class Streams(NamedTuple):
    arrival: np.random.Generator
    computation: np.random.Generator
    transmission: np.random.Generator


def make_streams(master_seed: int) -> Streams:
    """Independent named sub-streams spawned from one master seed."""
    children = np.random.SeedSequence(master_seed).spawn(3)
    return Streams(*(np.random.Generator(np.random.PCG64(c)) for c in children))
