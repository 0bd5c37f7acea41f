"""Command-line front end.

Subcommands:

* ``fit``       evaluate a model on a full series, write fitted paths
* ``forecast``  fit, then summarise the one-step-ahead predictive law
* ``backtest``  rolling-origin evaluation across models and windows
* ``simulate``  draw a synthetic series (with its truth record)
* ``report``    re-emit summary tables from a stored backtest JSON

Options may also come from a flat ``key=value`` config file given with
``--config``; explicit command-line flags override file entries, which
override built-in defaults.  Exit codes: 0 success, 1 usage error,
2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from typing import Dict, List, Optional, Sequence

import numpy as np

from .backtest import CSV_COLUMNS, BacktestPlan, run_backtest
from .counts import CountSeries, next_week
from .dataio import DataError, read_series_csv, write_series_csv
from .engine import McmcConfig, NumericalError, run_chain
from .forecast import point_forecast, predictive_draws, predictive_quantiles
from .innovations import VARIANTS
from .reportio import (
    check_writable_dir,
    load_backtest_json,
    run_metadata,
    write_fitted_csv,
    write_fitted_svg,
    write_metadata_json,
)
from .simulate import simulate_series

__all__ = ["main", "argv_from_metadata"]

_USAGE_EXIT = 1
_DATA_EXIT = 2
_NUMERICAL_EXIT = 3


class _Parser(argparse.ArgumentParser):
    """argparse defaults to exit status 2 on usage errors; we reserve 2
    for data problems, so remap usage failures to 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(_USAGE_EXIT, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="zipvol", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", metavar="FILE",
                       help="flat key=value option file; flags override it")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None, metavar="DIR",
                       help="output directory (created if missing)")
        return p

    def add_model(p, with_all=False):
        choices = list(VARIANTS) + (["all"] if with_all else [])
        p.add_argument("--model", choices=choices, default=None)

    def add_chain(p):
        p.add_argument("--burn", type=int, default=None,
                       help="burn-in sweeps")
        p.add_argument("--draws", type=int, default=None,
                       help="posterior draws kept after burn-in")

    def add_flavor(p):
        g = p.add_mutually_exclusive_group()
        g.add_argument("--conditional", dest="conditional",
                       action="store_true", default=None,
                       help="positive-count predictive flavor (default)")
        g.add_argument("--unconditional", dest="conditional",
                       action="store_false",
                       help="full zero-inflated predictive flavor")

    p = add("fit", "fit one model and write its fitted paths")
    p.add_argument("--input", metavar="CSV", default=None)
    add_model(p)
    add_chain(p)
    p.add_argument("--svg", action="store_true", default=None,
                   help="also write a line-plot SVG of the fitted paths")

    p = add("forecast", "one-step-ahead predictive summary")
    p.add_argument("--input", metavar="CSV", default=None)
    add_model(p)
    add_chain(p)
    add_flavor(p)

    p = add("backtest", "rolling-origin predictive evaluation")
    p.add_argument("--input", metavar="CSV", default=None)
    add_model(p, with_all=True)
    add_chain(p)
    p.add_argument("--windows", type=int, default=None,
                   help="number of rolling one-step windows")
    add_flavor(p)

    p = add("simulate", "draw a synthetic series with its truth record")
    add_model(p)
    p.add_argument("--weeks", type=int, default=None,
                   help="series length")
    p.add_argument("--pi", type=float, default=None,
                   help="sampling-path probability (0 and 1 allowed)")

    p = add("report", "re-emit tables from a stored backtest JSON")
    p.add_argument("--input", metavar="JSON", default=None)
    add_flavor(p)

    return parser


def _read_config_file(path: str) -> Dict[str, str]:
    """Flat ``key=value`` option file; blank lines and # comments skipped."""
    out: Dict[str, str] = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise DataError(
                        f"{path}:{lineno}: expected key=value, got {line!r}")
                key, _, value = line.partition("=")
                out[key.strip()] = value.strip()
    except OSError as exc:
        raise DataError(f"cannot read config file {path}: {exc}") from exc
    return out


def _as_bool(text: str) -> bool:
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise DataError(f"cannot interpret {text!r} as a boolean")


def _resolve(args, file_cfg: Dict[str, str], key: str, default, cast):
    """CLI flag beats config file beats built-in default."""
    cli = getattr(args, key, None)
    if cli is not None:
        return cli
    if key in file_cfg:
        try:
            return cast(file_cfg[key])
        except (ValueError, TypeError) as exc:
            raise DataError(f"config key {key}={file_cfg[key]!r}: {exc}") from exc
    return default


def _resolved_options(args) -> Dict[str, object]:
    """Merge CLI, config file, and defaults into one plain dict."""
    file_cfg = _read_config_file(args.config) if args.config else {}
    cmd = args.command
    opts: Dict[str, object] = {"command": cmd}

    def put(key, default, cast):
        opts[key] = _resolve(args, file_cfg, key, default, cast)

    put("seed", 0, int)
    put("out", None, str)
    if cmd in ("fit", "forecast", "backtest", "report"):
        put("input", None, str)
    if cmd in ("fit", "forecast", "backtest", "simulate"):
        default_model = "all" if cmd == "backtest" else "gaussian"
        put("model", default_model, str)
        allowed = list(VARIANTS) + (["all"] if cmd == "backtest" else [])
        if opts["model"] not in allowed:
            raise DataError(
                f"unknown model {opts['model']!r}; expected one of "
                + ", ".join(allowed))
    if cmd in ("fit", "forecast", "backtest"):
        put("burn", 2000, int)
        put("draws", 10000, int)
        if opts["burn"] < 0 or opts["draws"] < 1:
            raise DataError("burn must be >= 0 and draws >= 1")
    if cmd == "backtest":
        put("windows", 250, int)
    if cmd in ("forecast", "backtest", "report"):
        put("conditional", True, _as_bool)
    if cmd == "fit":
        put("svg", False, _as_bool)
    if cmd == "simulate":
        put("weeks", 300, int)
        put("pi", 0.9, float)
    return opts


def argv_from_metadata(payload: Dict[str, object]) -> List[str]:
    """Rebuild an equivalent command line from a run-metadata payload.

    ``main(argv_from_metadata(json.load(fh)))`` re-executes the run.
    """
    from .reportio import run_config_from_metadata

    command, config = run_config_from_metadata(payload)
    argv = [command]
    for key, value in config.items():
        if key == "command" or value is None:
            continue
        if key == "conditional":
            argv.append("--conditional" if value else "--unconditional")
        elif key == "svg":
            if value:
                argv.append("--svg")
        else:
            argv += [f"--{key}", str(value)]
    return argv


def _require(opts: Dict[str, object], key: str) -> object:
    if opts.get(key) is None:
        raise DataError(f"--{key} is required for `zipvol {opts['command']}`")
    return opts[key]


def _print_table(rows: Sequence[Dict[str, object]]) -> None:
    if not rows:
        print("(no rows)")
        return
    cols = list(CSV_COLUMNS)
    widths = {c: max(len(c), 10) for c in cols}
    print("  ".join(c.rjust(widths[c]) for c in cols))
    for row in rows:
        cells = []
        for c in cols:
            v = row[c]
            cells.append(
                (f"{v:.4f}" if isinstance(v, float) else str(v)).rjust(widths[c]))
        print("  ".join(cells))


def _fit_store(opts: Dict[str, object], series: CountSeries,
               store_paths: bool):
    config = McmcConfig(
        variant=str(opts["model"]),
        n_burn=int(opts["burn"]),
        n_draws=int(opts["draws"]),
        seed=int(opts["seed"]),
        store_paths=store_paths,
    )
    return run_chain(series, config)


def _cmd_fit(opts: Dict[str, object]) -> int:
    path = _require(opts, "input")
    out = check_writable_dir(_require(opts, "out"))
    series = read_series_csv(path)
    t0 = time.perf_counter()
    store = _fit_store(opts, series, store_paths=True)
    wall = time.perf_counter() - t0

    write_fitted_csv(os.path.join(out, "fitted.csv"), series, store)
    if opts["svg"]:
        write_fitted_svg(os.path.join(out, "fitted.svg"), series, store)
    meta = run_metadata("fit", opts, int(opts["seed"]), wall, store.backend)
    write_metadata_json(os.path.join(out, "metadata.json"), meta)

    pi_mean, pi_sd = float(np.mean(store.pi)), float(np.std(store.pi))
    print(f"fit {opts['model']} on {len(series)} weeks "
          f"({store.n_draws} draws, {wall:.1f}s, {store.backend} kernel)")
    print(f"pi posterior mean {pi_mean:.4f} (sd {pi_sd:.4f}); "
          f"latent acceptance {store.acceptance['latent']:.3f}")
    print(f"wrote {out}/fitted.csv"
          + (f", {out}/fitted.svg" if opts["svg"] else "")
          + f", {out}/metadata.json")
    return 0


def _cmd_forecast(opts: Dict[str, object]) -> int:
    path = _require(opts, "input")
    out = check_writable_dir(_require(opts, "out"))
    series = read_series_csv(path)
    t0 = time.perf_counter()
    store = _fit_store(opts, series, store_paths=False)
    wall = time.perf_counter() - t0

    payload: Dict[str, object] = {
        "model": opts["model"],
        "weeks": len(series),
        "next_week": next_week(series.labels[-1]),
    }
    for conditional, tag in ((True, "conditional"), (False, "full")):
        draws = predictive_draws(store, conditional)
        qs = predictive_quantiles(draws)
        payload[tag] = {
            "log_point_forecast": point_forecast(store, conditional),
            "p_zero": float(np.mean(draws == 0)),
            "quantiles": {f"q{int(round(q * 100)):02d}": int(v)
                          for q, v in qs.items()},
        }
    meta = run_metadata("forecast", opts, int(opts["seed"]), wall,
                        store.backend)
    write_metadata_json(os.path.join(out, "metadata.json"), meta)
    with open(os.path.join(out, "forecast.json"), "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")

    tag = "conditional" if opts["conditional"] else "full"
    block = payload[tag]
    print(f"one-step-ahead predictive ({tag}) after {series.labels[-1]}:")
    print("  " + "  ".join(f"{k}={v}" for k, v in block["quantiles"].items()))
    print(f"  P(y=0)={block['p_zero']:.4f}  "
          f"log point forecast={block['log_point_forecast']:.4f}")
    print(f"wrote {out}/forecast.json, {out}/metadata.json")
    return 0


def _cmd_backtest(opts: Dict[str, object]) -> int:
    path = _require(opts, "input")
    out = check_writable_dir(_require(opts, "out"))
    series = read_series_csv(path)
    variants = tuple(VARIANTS) if opts["model"] == "all" else (str(opts["model"]),)
    try:
        plan = BacktestPlan(
            n_windows=int(opts["windows"]),
            n_burn=int(opts["burn"]),
            n_draws=int(opts["draws"]),
            seed=int(opts["seed"]),
            variants=variants,
        )
        t0 = time.perf_counter()
        result = run_backtest(series, plan, dataset=os.path.splitext(
            os.path.basename(path))[0])
        wall = time.perf_counter() - t0
    except ValueError as exc:
        raise DataError(str(exc)) from exc

    result.to_csv(os.path.join(out, "backtest_conditional.csv"), True)
    result.to_csv(os.path.join(out, "backtest_full.csv"), False)
    result.to_json(os.path.join(out, "backtest_windows.json"))
    meta = run_metadata("backtest", opts, int(opts["seed"]), wall)
    write_metadata_json(os.path.join(out, "metadata.json"), meta)

    flavor = bool(opts["conditional"])
    print(f"backtest: {plan.n_windows} windows x {len(variants)} models "
          f"on {len(series)} weeks ({wall:.1f}s)")
    _print_table(result.summary(flavor))
    if result.failures:
        print(f"{len(result.failures)} window(s) failed numerically; "
              "see backtest_windows.json")
    print(f"wrote {out}/backtest_conditional.csv, {out}/backtest_full.csv, "
          f"{out}/backtest_windows.json, {out}/metadata.json")
    return 0


def _cmd_simulate(opts: Dict[str, object]) -> int:
    out = check_writable_dir(_require(opts, "out"))
    try:
        series, truth = simulate_series(
            str(opts["model"]), int(opts["weeks"]),
            seed=int(opts["seed"]), pi=float(opts["pi"]))
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    write_series_csv(series, os.path.join(out, "series.csv"))
    record = {
        "variant": truth.variant,
        "pi": truth.pi,
        "z0": truth.z0,
        "params": {k: (list(v) if isinstance(v, tuple) else v)
                   for k, v in truth.params.items()},
        "z": [float(v) for v in truth.z],
        "s": [int(v) for v in truth.s],
    }
    with open(os.path.join(out, "truth.json"), "w", encoding="utf-8") as fh:
        json.dump(record, fh, indent=1)
        fh.write("\n")
    meta = run_metadata("simulate", opts, int(opts["seed"]), 0.0)
    write_metadata_json(os.path.join(out, "metadata.json"), meta)
    print(f"simulated {len(series)} weeks from the {opts['model']} generator "
          f"(pi={float(opts['pi']):g}, seed={opts['seed']})")
    print(f"wrote {out}/series.csv, {out}/truth.json, {out}/metadata.json")
    return 0


def _cmd_report(opts: Dict[str, object]) -> int:
    path = _require(opts, "input")
    out = check_writable_dir(_require(opts, "out"))
    t0 = time.perf_counter()
    result = load_backtest_json(path)
    meta = run_metadata("report", opts, int(opts["seed"]),
                        time.perf_counter() - t0)
    write_metadata_json(os.path.join(out, "metadata.json"), meta)
    if not result.windows:
        print("empty report: no window records; wrote metadata only")
        return 0
    result.to_csv(os.path.join(out, "backtest_conditional.csv"), True)
    result.to_csv(os.path.join(out, "backtest_full.csv"), False)
    _print_table(result.summary(bool(opts["conditional"])))
    print(f"wrote {out}/backtest_conditional.csv, {out}/backtest_full.csv, "
          f"{out}/metadata.json")
    return 0


_COMMANDS = {
    "fit": _cmd_fit,
    "forecast": _cmd_forecast,
    "backtest": _cmd_backtest,
    "simulate": _cmd_simulate,
    "report": _cmd_report,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        opts = _resolved_options(args)
        return _COMMANDS[args.command](opts)
    except DataError as exc:
        print(f"zipvol: data error: {exc}", file=sys.stderr)
        return _DATA_EXIT
    except NumericalError as exc:
        print(f"zipvol: numerical failure: {exc}", file=sys.stderr)
        return _NUMERICAL_EXIT


if __name__ == "__main__":
    sys.exit(main())
