"""Average and peak age of information for a computation -> transmission tandem queue."""

from .analytic import AnalyticError, AoiAnalytics, SystemConfig, analyze
from .distributions import ServiceDistribution, make_streams
from .optimizer import Coupling, Weights, optimize, tradeoff_frontier
from .simulator import SimConfig, compare_models, simulate_actual, simulate_equivalent, summarize

__all__ = [
    "AnalyticError",
    "AoiAnalytics",
    "Coupling",
    "ServiceDistribution",
    "SimConfig",
    "SystemConfig",
    "Weights",
    "analyze",
    "compare_models",
    "make_streams",
    "optimize",
    "simulate_actual",
    "simulate_equivalent",
    "summarize",
    "tradeoff_frontier",
]
