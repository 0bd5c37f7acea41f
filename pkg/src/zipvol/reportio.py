"""Report emission: fitted-path tables, run metadata, and SVG plots.

Three artifact families come out of a run:

* a fitted-path CSV with one row per observed week carrying the
  posterior mean and 5%/95% quantiles of the log-intensity, the
  intensity, the log innovation variance (stochastic-volatility runs
  only), and the sampling-path probability;
* a run-metadata JSON holding the random seed, the fully resolved run
  configuration, library versions, and wall time -- enough to re-execute
  the run from the file alone;
* optional self-contained SVG line plots of those paths.

Backtest tables are produced by :mod:`zipvol.backtest`; this module
adds a loader so a stored per-window JSON can be re-summarised without
re-running any chains.
"""

from __future__ import annotations

import datetime as _dt
import json
import os
import platform
from typing import Dict, List, Optional

import numpy as np

from . import __version__
from .counts import CountSeries
from .dataio import DataError

__all__ = [
    "fitted_table",
    "write_fitted_csv",
    "run_metadata",
    "write_metadata_json",
    "run_config_from_metadata",
    "write_fitted_svg",
    "load_backtest_json",
    "check_writable_dir",
]


def check_writable_dir(path: str | os.PathLike) -> str:
    """Verify ``path`` is a writable directory before any work starts.

    Creates the directory if missing.  Returns the normalised path.
    """
    out = os.fspath(path)
    try:
        os.makedirs(out, exist_ok=True)
        probe = os.path.join(out, ".write-probe")
        with open(probe, "w") as fh:
            fh.write("")
        os.remove(probe)
    except OSError as exc:
        raise DataError(f"output directory {out!r} is not writable: {exc}") from exc
    return out


def _path_summary(draws: np.ndarray) -> Dict[str, np.ndarray]:
    """Mean and 5%/95% quantiles column-wise over posterior path draws."""
    return {
        "mean": draws.mean(axis=0),
        "q05": np.quantile(draws, 0.05, axis=0),
        "q95": np.quantile(draws, 0.95, axis=0),
    }


def fitted_table(series: CountSeries, store) -> tuple[List[str], List[List]]:
    """Build the fitted-path table from a finished run.

    Returns ``(header, rows)`` with one row per observed week.  The
    sampling-path probability is the per-draw conditional probability
    Pr(s_t = 1 | y_t, z_t, pi) averaged over draws, which for zero
    counts is pi * exp(-lambda) / (1 - pi + pi * exp(-lambda)) and for
    positive counts is exactly one.
    """
    if store.z_paths is None:
        raise ValueError("run was made without stored paths; rerun with store_paths")
    T = series.T
    z = np.asarray(store.z_paths)[:, 1 : T + 1]  # drop anchor and forecast sites
    pi = np.asarray(store.pi)[:: store.config.thin]  # same stride as kept paths

    zs = _path_summary(z)
    lam = np.exp(z)
    ls = _path_summary(lam)

    prob = np.ones_like(z)
    zero = series.counts == 0
    if zero.any():
        lam0 = lam[:, zero]
        num = pi[:, None] * np.exp(-lam0)
        prob[:, zero] = num / (1.0 - pi[:, None] + num)
    ps = _path_summary(prob)

    header = [
        "week",
        "count",
        "z_mean",
        "z_q05",
        "z_q95",
        "intensity_mean",
        "intensity_q05",
        "intensity_q95",
    ]
    blocks = [zs, ls]
    if store.h_paths is not None:
        # increment t-1 carries week t; the final increment feeds the forecast
        hs = _path_summary(np.asarray(store.h_paths)[:, :T])
        header += ["h_mean", "h_q05", "h_q95"]
        blocks.append(hs)
    header += ["s_prob_mean", "s_prob_q05", "s_prob_q95"]
    blocks.append(ps)

    rows: List[List] = []
    for t in range(T):
        row: List = [series.labels[t], int(series.counts[t])]
        for blk in blocks:
            row += [float(blk["mean"][t]), float(blk["q05"][t]), float(blk["q95"][t])]
        rows.append(row)
    return header, rows


def write_fitted_csv(path: str | os.PathLike, series: CountSeries, store) -> None:
    header, rows = fitted_table(series, store)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(
                ",".join(
                    f"{v:.6f}" if isinstance(v, float) else str(v) for v in row
                )
                + "\n"
            )


def run_metadata(
    command: str,
    config: Dict[str, object],
    seed: int,
    wall_time_s: float,
    backend: Optional[str] = None,
) -> Dict[str, object]:
    """Assemble the run-metadata payload.

    ``config`` must contain every knob needed to reproduce the run
    (input path, model, draw counts, flags); the test suite re-executes
    runs from this payload alone.
    """
    import scipy

    return {
        "command": command,
        "seed": int(seed),
        "config": dict(config),
        "versions": {
            "zipvol": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "backend": backend,
        "wall_time_s": round(float(wall_time_s), 3),
        "created_utc": _dt.datetime.now(_dt.timezone.utc).isoformat(
            timespec="seconds"
        ),
    }


def write_metadata_json(path: str | os.PathLike, payload: Dict[str, object]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_config_from_metadata(payload: Dict[str, object]) -> tuple[str, Dict[str, object]]:
    """Recover ``(command, config)`` from a metadata payload.

    The inverse of :func:`run_metadata` for re-execution: feeding the
    returned config back through the command-line front end reproduces
    the original run bit for bit (same seed, same draws).
    """
    try:
        return str(payload["command"]), dict(payload["config"])
    except (KeyError, TypeError) as exc:
        raise DataError(f"metadata payload is missing {exc}") from exc


def write_fitted_svg(path: str | os.PathLike, series: CountSeries, store) -> None:
    """Self-contained SVG line plots of the fitted paths."""
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    header, rows = fitted_table(series, store)
    cols = {name: np.array([r[i] for r in rows], dtype=object) for i, name in enumerate(header)}
    x = np.arange(series.T)
    has_h = "h_mean" in cols
    n_panels = 3 + (1 if has_h else 0)

    fig, axes = plt.subplots(
        n_panels, 1, figsize=(9, 2.2 * n_panels), sharex=True, constrained_layout=True
    )
    axes = np.atleast_1d(axes)

    ax = axes[0]
    ax.plot(x, series.counts, color="0.3", lw=0.8, label="observed")
    ax.plot(x, cols["intensity_mean"].astype(float), color="C0", lw=1.2, label="intensity")
    ax.fill_between(
        x,
        cols["intensity_q05"].astype(float),
        cols["intensity_q95"].astype(float),
        color="C0",
        alpha=0.25,
        lw=0,
    )
    ax.set_ylabel("count")
    ax.legend(loc="upper right", fontsize=8)

    ax = axes[1]
    ax.plot(x, cols["z_mean"].astype(float), color="C1", lw=1.2)
    ax.fill_between(
        x,
        cols["z_q05"].astype(float),
        cols["z_q95"].astype(float),
        color="C1",
        alpha=0.25,
        lw=0,
    )
    ax.set_ylabel("log intensity")

    k = 2
    if has_h:
        ax = axes[k]
        ax.plot(x, cols["h_mean"].astype(float), color="C2", lw=1.2)
        ax.fill_between(
            x,
            cols["h_q05"].astype(float),
            cols["h_q95"].astype(float),
            color="C2",
            alpha=0.25,
            lw=0,
        )
        ax.set_ylabel("log inn. var")
        k += 1

    ax = axes[k]
    ax.plot(x, cols["s_prob_mean"].astype(float), color="C3", lw=1.2)
    ax.fill_between(
        x,
        cols["s_prob_q05"].astype(float),
        cols["s_prob_q95"].astype(float),
        color="C3",
        alpha=0.25,
        lw=0,
    )
    ax.set_ylabel("Pr(active)")
    ax.set_ylim(-0.02, 1.02)
    ax.set_xlabel("week index")

    step = max(1, series.T // 8)
    ax.set_xticks(x[::step])
    ax.set_xticklabels([series.labels[i] for i in range(0, series.T, step)],
                       rotation=30, fontsize=7)

    fig.savefig(path, format="svg")
    plt.close(fig)


def load_backtest_json(path: str | os.PathLike):
    """Rebuild a :class:`zipvol.backtest.BacktestResult` from its JSON dump."""
    from .backtest import BacktestPlan, BacktestResult

    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read backtest JSON {path}: {exc}") from exc

    try:
        dataset = payload["dataset"]
        train_length = int(payload["train_length"])
        n_windows = int(payload["n_windows"])
        seed = int(payload["seed"])
        windows = payload["windows"]
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"backtest JSON is missing or malformed: {exc}") from exc

    def _unkey(qdict):
        return {int(k[1:]) / 100.0: v for k, v in qdict.items()}

    decoded: Dict[str, list] = {}
    for variant, records in windows.items():
        rows = []
        for rec in records:
            rec = dict(rec)
            for key in ("q_cond", "q_full"):
                if key in rec and isinstance(rec[key], dict):
                    rec[key] = _unkey(rec[key])
            rows.append(rec)
        decoded[variant] = rows

    plan = BacktestPlan(
        n_windows=n_windows, seed=seed, variants=tuple(decoded.keys())
    )
    return BacktestResult(
        dataset=dataset,
        plan=plan,
        train_length=train_length,
        windows=decoded,
        failures=list(payload.get("failures", [])),
    )
