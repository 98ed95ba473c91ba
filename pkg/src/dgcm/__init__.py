"""Dynamic generalized covariance measure tests for nonstationary time series."""

from .engine import (
    StatisticKind,
    TestConfig,
    TestReport,
    calibrate,
    p_value,
    run_dgcm,
    run_independence,
    simulate_gaussian_path,
    statistic,
)
from .kernels import BACKEND
from .panel import EffectiveTimeRange, HypothesisSpec, OffsetSpec, TimeSeriesPanel, effective_times
from .sieve import SieveConfig

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "EffectiveTimeRange",
    "HypothesisSpec",
    "OffsetSpec",
    "SieveConfig",
    "StatisticKind",
    "TestConfig",
    "TestReport",
    "TimeSeriesPanel",
    "calibrate",
    "effective_times",
    "p_value",
    "run_dgcm",
    "run_independence",
    "simulate_gaussian_path",
    "statistic",
]
