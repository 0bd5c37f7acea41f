"""One-step-ahead density forecasts and their evaluation.

The chain already carries a one-step-ahead latent site, so each retained
draw (pi, z_next) defines a predictive distribution for the next count.
Scores average the predictive density over draws in log space; quantiles and
coverage come from the streamed predictive count draws.

Two flavours run in parallel throughout: "conditional" scores the Poisson
density given an open gate (structural zeros excluded), "full" scores the
zero-inflated mixture.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy.special import logsumexp

from .counts import poisson_log_pmf, zip_log_pmf
from .engine import DrawStore

DEFAULT_QUANTILES = (0.01, 0.05, 0.10, 0.90, 0.95, 0.99)


def predictive_draws(store: DrawStore, conditional: bool) -> np.ndarray:
    """The streamed predictive count draws of the requested flavour."""
    return store.y_next_cond if conditional else store.y_next_uncond


def holdout_log_densities(store: DrawStore, y_star: int,
                          conditional: bool) -> np.ndarray:
    """Per-draw log predictive density of the held-out count."""
    if y_star < 0:
        raise ValueError("held-out count must be non-negative")
    if conditional:
        return np.asarray(poisson_log_pmf(float(y_star), store.z_next))
    return np.asarray(zip_log_pmf(float(y_star), store.z_next, store.pi))


def log_predictive_score(log_densities: np.ndarray) -> float:
    """Log of the draw-averaged predictive density.

    Computed in log space, so single underflowing draws cost nothing; only
    when every draw has zero density does the score degenerate, in which
    case a warning is emitted and -inf returned.
    """
    ld = np.asarray(log_densities, dtype=np.float64)
    if ld.size == 0:
        raise ValueError("no predictive draws")
    if np.all(np.isneginf(ld)):
        warnings.warn("all predictive densities are zero; score is -inf",
                      RuntimeWarning, stacklevel=2)
        return -math.inf
    return float(logsumexp(ld) - math.log(ld.size))


def empirical_quantile(draws: np.ndarray, q: float) -> int:
    """Lower empirical quantile of integer draws.

    Uses the order statistic at rank ceil(q * M), clamped to at least 1, so
    the result is always one of the draws.
    """
    if not 0.0 < q < 1.0:
        raise ValueError("quantile level must lie in (0, 1)")
    draws = np.sort(np.asarray(draws))
    if draws.size == 0:
        raise ValueError("no predictive draws")
    rank = max(math.ceil(q * draws.size), 1)
    return int(draws[rank - 1])


def predictive_quantiles(draws: np.ndarray,
                         levels=DEFAULT_QUANTILES) -> dict:
    draws = np.sort(np.asarray(draws))
    if draws.size == 0:
        raise ValueError("no predictive draws")
    out = {}
    for q in levels:
        rank = max(math.ceil(q * draws.size), 1)
        out[q] = int(draws[rank - 1])
    return out


def coverage_report(actuals: np.ndarray, quantile_rows: list[dict],
                    levels=DEFAULT_QUANTILES) -> dict:
    """Fraction of windows whose outcome falls at or below each quantile.

    Calibration means the fraction for level q is close to q; counts are
    discrete so exact equality is not attainable.
    """
    actuals = np.asarray(actuals)
    if len(quantile_rows) != actuals.size:
        raise ValueError("one quantile row per outcome required")
    if actuals.size == 0:
        raise ValueError("no windows to evaluate")
    out = {}
    for q in levels:
        hits = sum(int(a <= row[q]) for a, row in zip(actuals, quantile_rows))
        out[q] = hits / actuals.size
    return out


def point_forecast(store: DrawStore, conditional: bool) -> float:
    """Log-scale point forecast matching the evaluation transform.

    Conditional: log of the posterior mean intensity, compared against
    log y on positive outcomes.  Full: log1p of the posterior mean gated
    intensity pi * exp(z), compared against log1p(y) on all outcomes.
    Both averages run in log space to survive explosive draws.
    """
    m = store.n_draws
    if conditional:
        return float(logsumexp(store.z_next) - math.log(m))
    with np.errstate(divide="ignore"):
        log_gated = np.log(store.pi) + store.z_next
    lm = float(logsumexp(log_gated) - math.log(m))
    return float(np.logaddexp(0.0, lm))


def point_metrics(forecasts: np.ndarray, actuals: np.ndarray,
                  conditional: bool) -> dict:
    """RMSE and correlation of log-scale point forecasts.

    The conditional flavour keeps only positive outcomes and compares
    against log y; the full flavour keeps everything and compares against
    log1p(y).  Correlation is NaN when fewer than two usable windows remain
    or either side is constant.
    """
    forecasts = np.asarray(forecasts, dtype=np.float64)
    actuals = np.asarray(actuals, dtype=np.float64)
    if forecasts.shape != actuals.shape:
        raise ValueError("forecast and outcome lengths differ")
    if conditional:
        keep = actuals > 0
        preds = forecasts[keep]
        target = np.log(actuals[keep])
    else:
        preds = forecasts
        target = np.log1p(actuals)
    n = preds.size
    if n == 0:
        return {"rmse": float("nan"), "corr": float("nan"), "n": 0}
    err = preds - target
    rmse = float(np.sqrt(np.mean(err * err)))
    if n < 2 or np.ptp(preds) == 0.0 or np.ptp(target) == 0.0:
        corr = float("nan")
    else:
        corr = float(np.corrcoef(preds, target)[0, 1])
    return {"rmse": rmse, "corr": corr, "n": int(n)}
