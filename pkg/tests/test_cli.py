"""Command-line front end: exit codes, config precedence, re-execution."""

import json
import os

import pytest

import zipvol.cli as cli
from zipvol.counts import next_week
from zipvol.engine import NumericalError


def _run(capsys, argv):
    code = cli.main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


FAST = ["--burn", "40", "--draws", "120"]


class TestUsageErrors:
    def test_no_subcommand(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main([])
        assert exc.value.code == 1

    def test_unknown_subcommand(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["frobnicate"])
        assert exc.value.code == 1

    def test_unknown_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["fit", "--bogus", "1"])
        assert exc.value.code == 1

    def test_bad_model_choice(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["fit", "--model", "laplace"])
        assert exc.value.code == 1


class TestDataErrors:
    def test_missing_input_file(self, capsys, tmp_path):
        code, _, err = _run(capsys, [
            "fit", "--input", str(tmp_path / "absent.csv"),
            "--out", str(tmp_path / "out")] + FAST)
        assert code == 2
        assert "data error" in err

    def test_gapped_csv(self, capsys, tmp_path):
        bad = tmp_path / "gap.csv"
        bad.write_text("week,count\n2020-W01,1\n2020-W04,2\n")
        code, _, err = _run(capsys, [
            "fit", "--input", str(bad), "--out", str(tmp_path / "out")] + FAST)
        assert code == 2
        assert "missing" in err

    def test_missing_required_flag(self, capsys, tmp_path):
        code, _, err = _run(capsys, ["fit", "--out", str(tmp_path / "out")])
        assert code == 2
        assert "--input is required" in err

    def test_unwritable_out_fails_before_compute(self, capsys, tmp_path,
                                                 fixture_csv, monkeypatch):
        blocker = tmp_path / "file"
        blocker.write_text("x")

        def boom(*a, **k):
            raise AssertionError("chain must not start")

        monkeypatch.setattr(cli, "run_chain", boom)
        code, _, err = _run(capsys, [
            "fit", "--input", fixture_csv, "--out", str(blocker)] + FAST)
        assert code == 2
        assert "not writable" in err

    def test_model_validated_from_config_file(self, capsys, tmp_path,
                                              fixture_csv):
        cfg = tmp_path / "opts.cfg"
        cfg.write_text("model = laplace\n")
        code, _, err = _run(capsys, [
            "fit", "--config", str(cfg), "--input", fixture_csv,
            "--out", str(tmp_path / "out")] + FAST)
        assert code == 2
        assert "unknown model" in err


class TestNumericalFailure:
    def test_exit_code_three(self, capsys, tmp_path, fixture_csv,
                             monkeypatch):
        def blow_up(*a, **k):
            raise NumericalError("innovation block diverged at iteration 5")

        monkeypatch.setattr(cli, "run_chain", blow_up)
        code, _, err = _run(capsys, [
            "fit", "--input", fixture_csv, "--out",
            str(tmp_path / "out")] + FAST)
        assert code == 3
        assert "numerical failure" in err


class TestFit:
    def test_fit_writes_artifacts(self, capsys, tmp_path, fixture_csv):
        out = tmp_path / "run"
        code, text, _ = _run(capsys, [
            "fit", "--input", fixture_csv, "--model", "gaussian",
            "--out", str(out), "--seed", "3", "--svg"] + FAST)
        assert code == 0
        assert (out / "fitted.csv").exists()
        assert (out / "fitted.svg").exists()
        assert (out / "metadata.json").exists()
        assert "pi posterior mean" in text

    def test_metadata_reexecution_is_bit_identical(self, capsys, tmp_path,
                                                   fixture_csv):
        first = tmp_path / "first"
        code, _, _ = _run(capsys, [
            "fit", "--input", fixture_csv, "--model", "student_t",
            "--out", str(first), "--seed", "11"] + FAST)
        assert code == 0
        payload = json.loads((first / "metadata.json").read_text())

        argv = cli.argv_from_metadata(payload)
        assert argv[0] == "fit"
        second = tmp_path / "second"
        argv = [a if a != str(first) else str(second) for a in argv]
        code, _, _ = _run(capsys, argv)
        assert code == 0
        assert (second / "fitted.csv").read_text() == \
            (first / "fitted.csv").read_text()


class TestConfigPrecedence:
    def test_file_sets_flag_overrides(self, capsys, tmp_path, fixture_csv):
        cfg = tmp_path / "opts.cfg"
        cfg.write_text(
            "# chain budget\n"
            "burn = 40\n"
            "draws = 120\n"
            "seed = 9\n"
            "model = student_t\n")
        out = tmp_path / "out"
        code, _, _ = _run(capsys, [
            "fit", "--config", str(cfg), "--input", fixture_csv,
            "--model", "gaussian", "--out", str(out)])
        assert code == 0
        meta = json.loads((out / "metadata.json").read_text())
        # flag beat the file for model; file filled in the rest
        assert meta["config"]["model"] == "gaussian"
        assert meta["config"]["burn"] == 40
        assert meta["config"]["seed"] == 9

    def test_malformed_config_line(self, capsys, tmp_path, fixture_csv):
        cfg = tmp_path / "opts.cfg"
        cfg.write_text("draws\n")
        code, _, err = _run(capsys, [
            "fit", "--config", str(cfg), "--input", fixture_csv,
            "--out", str(tmp_path / "out")])
        assert code == 2
        assert "key=value" in err


class TestSimulateFitRoundTrip:
    def test_simulated_series_fits_cleanly(self, capsys, tmp_path):
        sim = tmp_path / "sim"
        code, _, _ = _run(capsys, [
            "simulate", "--model", "gaussian", "--weeks", "60",
            "--seed", "4", "--pi", "0.9", "--out", str(sim)])
        assert code == 0
        truth = json.loads((sim / "truth.json").read_text())
        assert truth["variant"] == "gaussian"
        assert len(truth["z"]) == 60

        fit = tmp_path / "fit"
        code, text, _ = _run(capsys, [
            "fit", "--input", str(sim / "series.csv"), "--model", "gaussian",
            "--out", str(fit), "--seed", "5"] + FAST)
        assert code == 0
        lines = (fit / "fitted.csv").read_text().splitlines()
        assert len(lines) == 61

    def test_simulate_rejects_bad_pi(self, capsys, tmp_path):
        code, _, err = _run(capsys, [
            "simulate", "--pi", "1.5", "--out", str(tmp_path / "out")])
        assert code == 2
        assert "pi" in err


class TestForecast:
    def test_forecast_payload(self, capsys, tmp_path, fixture_csv,
                              fixture_series):
        out = tmp_path / "fc"
        code, text, _ = _run(capsys, [
            "forecast", "--input", fixture_csv, "--model", "gaussian",
            "--out", str(out), "--seed", "2", "--unconditional"] + FAST)
        assert code == 0
        payload = json.loads((out / "forecast.json").read_text())
        assert set(payload) >= {"model", "weeks", "next_week",
                                "conditional", "full"}
        # the forecast target is the week after the last observation
        assert payload["next_week"] == next_week(fixture_series.labels[-1])
        for tag in ("conditional", "full"):
            qs = payload[tag]["quantiles"]
            assert set(qs) == {"q01", "q05", "q10", "q90", "q95", "q99"}
            assert qs["q01"] <= qs["q99"]
        assert "(full)" in text


@pytest.fixture(scope="module")
def backtest_out(tmp_path_factory):
    root = tmp_path_factory.mktemp("bt")
    series_dir = root / "sim"
    code = cli.main([
        "simulate", "--model", "gaussian", "--weeks", "46",
        "--seed", "8", "--out", str(series_dir)])
    assert code == 0
    out = root / "run"
    code = cli.main([
        "backtest", "--input", str(series_dir / "series.csv"),
        "--model", "gaussian", "--windows", "3", "--seed", "1",
        "--burn", "40", "--draws", "120", "--out", str(out)])
    assert code == 0
    return out


class TestBacktestAndReport:
    def test_backtest_artifacts(self, backtest_out, capsys):
        capsys.readouterr()
        for name in ("backtest_conditional.csv", "backtest_full.csv",
                     "backtest_windows.json", "metadata.json"):
            assert (backtest_out / name).exists()
        header = (backtest_out / "backtest_full.csv").read_text().splitlines()[0]
        assert header == "dataset,model,LPS,RMSE,Corr,q01,q05,q10,q90,q95,q99,n"

    def test_report_reproduces_tables(self, backtest_out, capsys, tmp_path):
        out = tmp_path / "rep"
        code, text, _ = _run(capsys, [
            "report", "--input", str(backtest_out / "backtest_windows.json"),
            "--out", str(out)])
        assert code == 0
        for name in ("backtest_conditional.csv", "backtest_full.csv"):
            assert (out / name).read_text() == \
                (backtest_out / name).read_text()

    def test_empty_report_writes_metadata_only(self, capsys, tmp_path):
        empty = tmp_path / "empty.json"
        empty.write_text(json.dumps({
            "dataset": "x", "n_windows": 1, "train_length": 10,
            "seed": 0, "windows": {}, "failures": []}))
        out = tmp_path / "rep"
        code, text, _ = _run(capsys, [
            "report", "--input", str(empty), "--out", str(out)])
        assert code == 0
        assert "metadata only" in text
        assert sorted(os.listdir(out)) == ["metadata.json"]
