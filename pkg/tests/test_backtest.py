"""Rolling-origin backtest harness: planning, seeding, aggregation."""

import csv
import math

import numpy as np
import pytest

from zipvol.backtest import (
    CSV_COLUMNS,
    BacktestPlan,
    BacktestResult,
    cell_seed,
    rolling_windows,
    run_backtest,
)
from zipvol.simulate import simulate_series


class TestRollingWindows:
    def test_long_series_shape(self):
        train_length, spans = rolling_windows(494, 250)
        assert train_length == 244
        assert len(spans) == 250
        assert spans[0] == (0, 244)
        # last holdout is the final observation
        assert spans[-1] == (249, 493)
        assert spans[-1][1] == 494 - 1

    def test_minimal_series(self):
        train_length, spans = rolling_windows(12, 2)
        assert train_length == 10
        assert spans == [(0, 10), (1, 11)]

    def test_too_short_refused(self):
        with pytest.raises(ValueError, match="training span"):
            rolling_windows(12, 3)
        with pytest.raises(ValueError, match="training span"):
            rolling_windows(9, 1)

    def test_origin_advances_one_week(self):
        _, spans = rolling_windows(60, 20)
        starts = [s for s, _ in spans]
        assert starts == list(range(20))
        holds = [h for _, h in spans]
        assert np.all(np.diff(holds) == 1)


class TestCellSeed:
    def test_stable_across_calls(self):
        assert cell_seed(0, "ita", "sv", 3) == cell_seed(0, "ita", "sv", 3)

    def test_distinct_across_coordinates(self):
        seeds = {
            cell_seed(m, d, v, w)
            for m in (0, 1)
            for d in ("ita", "uk")
            for v in ("gaussian", "sv")
            for w in (0, 1, 2)
        }
        assert len(seeds) == 2 * 2 * 2 * 3

    def test_no_separator_collisions(self):
        # the joined key must not confuse ("a", "b|c") with ("a|b", "c")
        assert cell_seed(1, "a", "b|c", 0) != cell_seed(1, "a|b", "c", 0)


class TestPlanValidation:
    def test_rejects_unknown_variant(self):
        with pytest.raises(ValueError, match="unknown model"):
            BacktestPlan(variants=("gaussian", "laplace"))

    def test_rejects_zero_windows(self):
        with pytest.raises(ValueError, match="window"):
            BacktestPlan(n_windows=0)


def _tiny_plan(**kw):
    base = dict(n_windows=3, n_burn=60, n_draws=240, thin=4, seed=5,
                variants=("gaussian",), n_jobs=1)
    base.update(kw)
    return BacktestPlan(**base)


@pytest.fixture(scope="module")
def tiny_result():
    series, _ = simulate_series("gaussian", T=40, seed=31, pi=0.85)
    return series, run_backtest(series, _tiny_plan(), dataset="toy")


class TestRunBacktest:
    def test_every_window_scored(self, tiny_result):
        series, result = tiny_result
        assert result.train_length == 37
        assert not result.failures
        records = result.windows["gaussian"]
        assert [r["window"] for r in records] == [0, 1, 2]
        # holdouts are the last three observations in order
        assert [r["y"] for r in records] == list(series.counts[-3:])
        for r in records:
            assert math.isfinite(r["lps_full"])
            assert r["lps_full"] <= 0.0
            assert set(r["q_cond"]) == {0.01, 0.05, 0.10, 0.90, 0.95, 0.99}

    def test_parallel_matches_serial(self, tiny_result):
        series, serial = tiny_result
        parallel = run_backtest(series, _tiny_plan(n_jobs=2), dataset="toy")
        assert parallel.windows == serial.windows
        assert parallel.failures == serial.failures

    def test_summary_conditional_drops_zero_outcomes(self):
        plan = _tiny_plan(n_windows=2)
        result = BacktestResult(dataset="toy", plan=plan, train_length=10)
        row = {"variant": "gaussian", "y": 0,
               "lps_cond": -1.0, "lps_full": -0.5,
               "q_cond": {q: 3 for q in (0.01, 0.05, 0.10, 0.90, 0.95, 0.99)},
               "q_full": {q: 3 for q in (0.01, 0.05, 0.10, 0.90, 0.95, 0.99)},
               "point_cond": 1.0, "point_full": 1.0}
        other = dict(row, window=1, y=7, lps_cond=-2.0, lps_full=-2.5)
        result.windows["gaussian"] = [dict(row, window=0), other]
        cond = result.summary(conditional=True)[0]
        full = result.summary(conditional=False)[0]
        assert cond["n"] == 1
        assert cond["LPS"] == pytest.approx(-2.0)
        assert full["n"] == 2
        assert full["LPS"] == pytest.approx(-3.0)

    def test_summary_handles_empty_variant(self):
        plan = _tiny_plan()
        result = BacktestResult(dataset="toy", plan=plan, train_length=10)
        row = result.summary(conditional=True)[0]
        assert row["n"] == 0
        assert math.isnan(row["LPS"])

    def test_csv_columns_exact(self, tiny_result, tmp_path):
        _, result = tiny_result
        path = tmp_path / "summary.csv"
        result.to_csv(str(path), conditional=False)
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        assert tuple(rows[0]) == CSV_COLUMNS
        assert rows[1][0] == "toy"
        assert rows[1][1] == "gaussian"
        # floats serialized to six places, counts as plain ints
        float(rows[1][2])
        assert "." in rows[1][2]
        assert rows[1][-1] == "3"

    def test_json_round_trip_preserves_summary(self, tiny_result, tmp_path):
        from zipvol.reportio import load_backtest_json

        _, result = tiny_result
        path = tmp_path / "windows.json"
        result.to_json(str(path))
        loaded = load_backtest_json(str(path))
        for conditional in (True, False):
            assert loaded.summary(conditional) == result.summary(conditional)

    def test_lps_sum_matches_records(self, tiny_result):
        _, result = tiny_result
        records = result.windows["gaussian"]
        full = result.summary(conditional=False)[0]
        assert full["LPS"] == pytest.approx(
            sum(r["lps_full"] for r in records), abs=1e-12)
