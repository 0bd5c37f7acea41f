"""Rolling-origin backtest: repeated one-step density forecasts.

Window i trains on weeks [i, i + train_length) and scores the week at
i + train_length; the training span is fixed and the origin advances one
week per window, so the last window ends at the final observation.  Every
(variant, window) cell runs an independent cold-started chain whose seed is
a stable hash of (master seed, dataset, variant, window); results therefore
do not depend on worker count or scheduling.

Aggregation happens twice: the "conditional" flavour scores the Poisson
density given an open gate and keeps only windows with a positive outcome,
the "full" flavour scores the zero-inflated mixture on all windows.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .counts import CountSeries, week_labels
from .engine import McmcConfig, NumericalError, run_chain
from .forecast import (DEFAULT_QUANTILES, coverage_report,
                       holdout_log_densities, log_predictive_score,
                       point_forecast, point_metrics, predictive_draws,
                       predictive_quantiles)
from .innovations import VARIANTS

CSV_COLUMNS = ("dataset", "model", "LPS", "RMSE", "Corr",
               "q01", "q05", "q10", "q90", "q95", "q99", "n")

MIN_TRAIN_LENGTH = 10


@dataclass(frozen=True)
class BacktestPlan:
    """What to run: windows, chain budget, variants, parallelism."""

    n_windows: int = 250
    n_burn: int = 1000
    n_draws: int = 5000
    thin: int = 10
    seed: int = 0
    variants: tuple = VARIANTS
    n_jobs: int | None = None
    n_components: int = 2

    def __post_init__(self):
        if self.n_windows < 1:
            raise ValueError("need at least one window")
        for v in self.variants:
            if v not in VARIANTS:
                raise ValueError(
                    f"unknown model variant {v!r}; "
                    f"expected one of {', '.join(VARIANTS)}")


def rolling_windows(T: int, n_windows: int):
    """Training length and (start, holdout) index pairs.

    The training span is T - n_windows, so the holdout of the last window is
    the final observation.  Spans shorter than MIN_TRAIN_LENGTH are refused:
    the chain has nothing to learn a trend from.
    """
    train_length = T - n_windows
    if train_length < MIN_TRAIN_LENGTH:
        raise ValueError(
            f"{n_windows} windows on {T} weeks leaves a training span of "
            f"{train_length}; need at least {MIN_TRAIN_LENGTH}")
    return train_length, [(i, i + train_length) for i in range(n_windows)]


def cell_seed(master_seed: int, dataset: str, variant: str,
              window: int) -> int:
    """Stable per-cell seed, independent of execution order."""
    # length-prefixed fields so a separator inside a name cannot alias
    # another cell
    parts = (str(master_seed), dataset, variant, str(window))
    key = "|".join(f"{len(p)}:{p}" for p in parts).encode()
    return int.from_bytes(
        hashlib.blake2b(key, digest_size=8).digest(), "little")


def _run_cell(args):
    (variant, window, counts, y_star, seed,
     n_burn, n_draws, thin, n_components) = args
    try:
        data = CountSeries(week_labels("2000-W01", counts.size), counts)
        config = McmcConfig(variant=variant, n_burn=n_burn, n_draws=n_draws,
                            thin=thin, seed=seed, store_paths=False,
                            n_components=n_components)
        store = run_chain(data, config)
        record = {"variant": variant, "window": window, "y": y_star}
        for conditional, tag in ((True, "cond"), (False, "full")):
            ld = holdout_log_densities(store, y_star, conditional)
            record[f"lps_{tag}"] = log_predictive_score(ld)
            draws = predictive_draws(store, conditional)
            record[f"q_{tag}"] = predictive_quantiles(draws)
            record[f"point_{tag}"] = point_forecast(store, conditional)
        return record
    except NumericalError as exc:
        return {"variant": variant, "window": window, "error": str(exc)}


@dataclass
class BacktestResult:
    dataset: str
    plan: BacktestPlan
    train_length: int
    windows: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    def summary(self, conditional: bool) -> list[dict]:
        """One aggregate row per variant, in plan order."""
        tag = "cond" if conditional else "full"
        rows = []
        for variant in self.plan.variants:
            records = self.windows.get(variant, [])
            if conditional:
                records = [r for r in records if r["y"] > 0]
            row = {"dataset": self.dataset, "model": variant}
            if not records:
                row.update({"LPS": float("nan"), "RMSE": float("nan"),
                            "Corr": float("nan"),
                            **{_qkey(q): float("nan")
                               for q in DEFAULT_QUANTILES},
                            "n": 0})
                rows.append(row)
                continue
            actuals = np.array([r["y"] for r in records])
            row["LPS"] = float(sum(r[f"lps_{tag}"] for r in records))
            points = np.array([r[f"point_{tag}"] for r in records])
            pm = point_metrics(points, actuals, conditional)
            row["RMSE"] = pm["rmse"]
            row["Corr"] = pm["corr"]
            coverage = coverage_report(
                actuals, [r[f"q_{tag}"] for r in records])
            for q in DEFAULT_QUANTILES:
                row[_qkey(q)] = coverage[q]
            row["n"] = len(records)
            rows.append(row)
        return rows

    def to_csv(self, path: str, conditional: bool) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
            writer.writeheader()
            for row in self.summary(conditional):
                writer.writerow({c: _fmt(row[c]) for c in CSV_COLUMNS})

    def to_json(self, path: str) -> None:
        payload = {
            "dataset": self.dataset,
            "n_windows": self.plan.n_windows,
            "train_length": self.train_length,
            "seed": self.plan.seed,
            "windows": {
                variant: [_jsonify(r) for r in records]
                for variant, records in self.windows.items()},
            "failures": self.failures,
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=1)


def _qkey(q: float) -> str:
    return f"q{int(round(q * 100)):02d}"


def _fmt(value):
    if isinstance(value, float):
        return f"{value:.6f}"
    return value


def _jsonify(record: dict) -> dict:
    out = {}
    for key, value in record.items():
        if isinstance(value, dict):
            out[key] = {_qkey(q): v for q, v in value.items()}
        else:
            out[key] = value
    return out


def run_backtest(data: CountSeries, plan: BacktestPlan,
                 dataset: str = "data") -> BacktestResult:
    """Run every (variant, window) cell, in parallel when allowed."""
    train_length, spans = rolling_windows(data.T, plan.n_windows)
    y = data.counts
    cells = []
    for variant in plan.variants:
        for window, (start, hold) in enumerate(spans):
            cells.append((
                variant, window, y[start:hold].copy(), int(y[hold]),
                cell_seed(plan.seed, dataset, variant, window),
                plan.n_burn, plan.n_draws, plan.thin, plan.n_components))

    n_jobs = plan.n_jobs if plan.n_jobs else (os.cpu_count() or 1)
    if n_jobs == 1 or len(cells) == 1:
        outcomes = [_run_cell(c) for c in cells]
    else:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            outcomes = list(pool.map(_run_cell, cells, chunksize=4))

    result = BacktestResult(dataset=dataset, plan=plan,
                            train_length=train_length)
    for rec in outcomes:
        if "error" in rec:
            result.failures.append(rec)
        else:
            result.windows.setdefault(rec["variant"], []).append(rec)
    for records in result.windows.values():
        records.sort(key=lambda r: r["window"])
    return result
