"""Shared fixtures and the acceptance-criterion result banner."""

import os

import numpy as np
import pytest

from zipvol.dataio import read_series_csv
from zipvol.engine import McmcConfig, run_chain

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")

_CRITERION_LABELS = {
    1: "oracle equivalence of latent conditionals",
    2: "conjugacy suite (IG, Gamma, Dirichlet, Beta)",
    3: "scale-mixture reproduces the t density",
    4: "joint-distribution (getting-it-right) test",
    5: "simulation-based calibration",
    6: "tail coverage on synthetic volatility data",
    7: "real-data model ordering (soft)",
    8: "real-data pi posterior (soft)",
}
_criterion_outcomes = {}


@pytest.fixture(scope="session")
def fixture_csv() -> str:
    return os.path.join(DATA_DIR, "synthetic_weekly.csv")


@pytest.fixture(scope="session")
def fixture_series(fixture_csv):
    return read_series_csv(fixture_csv)


@pytest.fixture(scope="session")
def small_store(fixture_series):
    """A quick gaussian run on the bundled fixture, shared across tests."""
    config = McmcConfig(variant="gaussian", n_burn=300, n_draws=1200,
                        thin=6, seed=123)
    return run_chain(fixture_series, config)


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.rsplit("::", 1)[-1]
    if not name.startswith("test_criterion_"):
        return
    try:
        number = int(name.split("_")[2])
    except (IndexError, ValueError):
        return
    if report.when == "setup" and report.skipped:
        _criterion_outcomes[number] = "SKIP (" + str(report.longrepr).rsplit(
            ":", 1)[-1].strip()[:100] + ")"
    elif report.when == "call":
        _criterion_outcomes[number] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _criterion_outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERION_LABELS):
        outcome = _criterion_outcomes.get(number, "NOT RUN")
        label = _CRITERION_LABELS[number]
        terminalreporter.write_line(
            f"criterion {number} ({label}): {outcome}")
