"""Bayesian dynamic zero-inflated Poisson models for weekly count series.

A latent log-intensity follows a random walk whose increments come from one
of four interchangeable innovation families (gaussian, student_t, mixture,
sv).  Observed counts are zero-inflated Poisson around the latent intensity.
The package fits the model by Markov chain Monte Carlo, produces one-step
density forecasts, and evaluates them through a rolling-origin backtest.
"""

from .counts import CountSeries, ZipParams, poisson_log_pmf, safe_poisson, zip_log_pmf
from .precision import TridiagonalPrecision, build_precision, conditional_moments
from .priors import PriorConfig

__version__ = "0.1.0"

from .backtest import BacktestPlan, BacktestResult, rolling_windows, run_backtest
from .dataio import DataError, parse_series, read_series_csv, write_series_csv
from .engine import (
    DrawStore,
    McmcConfig,
    NumericalError,
    diagnostics,
    ess_geyer,
    run_chain,
)
from .forecast import (
    coverage_report,
    empirical_quantile,
    log_predictive_score,
    point_forecast,
    predictive_draws,
    predictive_quantiles,
)
from .innovations import VARIANTS
from .simulate import simulate_series

__all__ = [
    "BacktestPlan",
    "BacktestResult",
    "CountSeries",
    "DataError",
    "DrawStore",
    "McmcConfig",
    "NumericalError",
    "PriorConfig",
    "TridiagonalPrecision",
    "VARIANTS",
    "ZipParams",
    "build_precision",
    "conditional_moments",
    "coverage_report",
    "diagnostics",
    "empirical_quantile",
    "ess_geyer",
    "log_predictive_score",
    "parse_series",
    "point_forecast",
    "poisson_log_pmf",
    "predictive_draws",
    "predictive_quantiles",
    "read_series_csv",
    "rolling_windows",
    "run_backtest",
    "run_chain",
    "safe_poisson",
    "simulate_series",
    "write_series_csv",
    "zip_log_pmf",
    "__version__",
]
