"""End-to-end statistical acceptance checks.

One test per criterion, each with a frozen seed, a stated tolerance, and a
wall-clock budget asserted at the end.  The conftest prints a one-line
PASS/FAIL/SKIP banner per criterion after the run.

The two real-data criteria are soft: they need ``data/italy.csv`` and
``data/uk.csv`` (see ``scripts/fetch_data.py``), and the full backtest
additionally requires ``ZIPVOL_RUN_FULL_BACKTEST=1`` because it runs for
hours at the full chain budget.
"""

import math
import os
import time

import numpy as np
import pytest
from scipy import stats

from zipvol.backtest import BacktestPlan, run_backtest
from zipvol.dataio import read_series_csv
from zipvol.engine import McmcConfig, run_chain
from zipvol.innovations import (
    InnovationState,
    VARIANTS,
    gaussian_update,
    init_innovations,
    mixture_update,
    student_t_update,
)
from zipvol.latent import update_pi
from zipvol.precision import build_precision, conditional_moments
from zipvol.priors import PriorConfig
from zipvol.simulate import draw_increments, simulate_series
from zipvol.validate import joint_distribution_test, simulation_based_calibration

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
DATA_ITALY = os.path.join(ROOT, "data", "italy.csv")
DATA_UK = os.path.join(ROOT, "data", "uk.csv")
HAVE_DATA = os.path.exists(DATA_ITALY) and os.path.exists(DATA_UK)
RUN_FULL = os.environ.get("ZIPVOL_RUN_FULL_BACKTEST") == "1"


def test_criterion_1_latent_conditional_oracle():
    """Single-site conditional moments against a dense-matrix oracle.

    100 random increment-precision vectors on paths of up to 15 sites; the
    oracle assembles the full path precision from rank-one difference terms
    and reads the conditional mean and variance off its rows.  Agreement
    within 1e-6 relative error, under one second.
    """
    rng = np.random.default_rng(1001)
    t0 = time.perf_counter()
    for _ in range(100):
        n = int(rng.integers(3, 16))
        k = 10.0 ** rng.uniform(-2.0, 2.0, n - 1)
        P = build_precision(k)
        dense = np.zeros((n, n))
        for i, ki in enumerate(k):
            d = np.zeros(n)
            d[i], d[i + 1] = -1.0, 1.0
            dense += ki * np.outer(d, d)
        z = rng.normal(0.0, 3.0, n)
        for t in range(n):
            m, v = conditional_moments(t, z, P)
            v_oracle = 1.0 / dense[t, t]
            m_oracle = z[t] - float(dense[t] @ z) / dense[t, t]
            np.testing.assert_allclose(v, v_oracle, rtol=1e-6)
            np.testing.assert_allclose(m, m_oracle, rtol=1e-6, atol=1e-12)
    elapsed = time.perf_counter() - t0
    assert elapsed < 1.0, f"oracle comparison took {elapsed:.2f}s"


def test_criterion_2_conjugacy_suite():
    """Every conjugate Gibbs block against its closed-form posterior.

    Each block is driven 1e5 times from a frozen conditioning state, and the
    draws are KS-tested (p > 0.01) against the exact posterior law computed
    from first principles: Beta for the gate probability, inverse-gamma for
    the innovation variance, gamma for a t mixing weight, and the Beta
    marginal of the Dirichlet weight update under a deterministic
    allocation.  Under 30 seconds.
    """
    n = 100_000
    rng = np.random.default_rng(2002)
    prior = PriorConfig()
    t0 = time.perf_counter()
    pvals = {}

    # gate probability: 7 open and 3 closed gates with the Beta(.5,.5) prior
    s = np.array([1] * 7 + [0] * 3, dtype=np.int8)
    draws = np.array([update_pi(s, rng) for _ in range(n)])
    pvals["beta"] = stats.kstest(draws, stats.beta(7.5, 3.5).cdf).pvalue

    # innovation variance given fixed increments
    dz = np.array([0.3, -0.5, 0.8, 0.1])
    g_state = InnovationState(variant="gaussian", n_inc=dz.size)
    out = np.empty(n)
    for i in range(n):
        gaussian_update(dz, g_state, prior, rng)
        out[i] = g_state.sigma2
    shape = prior.ig_shape + 0.5 * dz.size
    rate = prior.ig_rate + 0.5 * float(dz @ dz)
    pvals["inverse_gamma"] = stats.kstest(
        out, stats.invgamma(shape, scale=rate).cdf).pvalue

    # t mixing weight for one increment at frozen (nu, sigma2)
    dz1 = np.array([0.6])
    t_state = init_innovations("student_t", 1, rng)
    out = np.empty(n)
    for i in range(n):
        t_state.sigma2 = 0.25
        t_state.nu = 6.0
        student_t_update(dz1, t_state, prior, rng)
        out[i] = t_state.omega[0]
    g_shape = 6.0 / 2.0 + 0.5
    g_rate = 6.0 / 2.0 + 0.6 ** 2 / (2.0 * 0.25)
    pvals["gamma"] = stats.kstest(
        out, stats.gamma(g_shape, scale=1.0 / g_rate).cdf).pvalue

    # mixture weights: a huge variance gap forces every increment into the
    # wide component, so the Dirichlet update has deterministic counts
    # (0, 6) and its first marginal is Beta(1, 7)
    dzm = np.full(6, 3.0)
    m_state = init_innovations("mixture", 6, rng)
    out = np.empty(n)
    for i in range(n):
        m_state.sigma2 = 1.0
        m_state.eta = np.array([0.5, 0.5])
        m_state.comp_var = np.array([1e-6, 9.0])
        mixture_update(dzm, m_state, prior, rng)
        out[i] = m_state.eta[0]
    pvals["dirichlet"] = stats.kstest(out, stats.beta(1.0, 7.0).cdf).pvalue

    elapsed = time.perf_counter() - t0
    print("conjugacy KS p-values:",
          {k: round(v, 4) for k, v in pvals.items()})
    for name, p in pvals.items():
        assert p > 0.01, f"{name} block: KS p={p:.5f}"
    assert elapsed < 30.0, f"conjugacy suite took {elapsed:.1f}s"


def test_criterion_3_student_t_marginalization():
    """The gamma scale mixture integrates to the exact t density.

    One million increments drawn through the mixing representation, kernel
    density estimate compared pointwise with the closed-form t pdf; the
    sup gap must stay below 0.01 for nu = 4 and nu = 8.  Under one minute.
    """
    t0 = time.perf_counter()
    grid = np.linspace(-8.0, 8.0, 321)
    for nu in (4.0, 8.0):
        rng = np.random.default_rng(3000 + int(nu))
        dz, _ = draw_increments("student_t", 1_000_000, rng,
                                {"sigma2": 1.0, "nu": nu})
        kde = stats.gaussian_kde(dz)
        gap = float(np.max(np.abs(kde(grid) - stats.t.pdf(grid, df=nu))))
        print(f"nu={nu:g}: sup density gap {gap:.5f}")
        assert gap < 0.01
    elapsed = time.perf_counter() - t0
    assert elapsed < 60.0, f"marginalization check took {elapsed:.1f}s"


@pytest.mark.slow
def test_criterion_4_joint_distribution():
    """Getting-it-right test on all four innovation families at T=20.

    Two simulators of the same joint law -- prior-predictive draws and the
    sampler interleaved with data refreshes -- must agree on the means of
    every test function (gate probability, family scale, mid-series
    log-intensity, log1p mid-series count) within four Monte Carlo standard
    errors at 2e5 samples per simulator.  Under ten minutes.
    """
    t0 = time.perf_counter()
    for variant in VARIANTS:
        report = joint_distribution_test(variant, T=20, n_samples=200_000,
                                         seed=0, n_jobs=1)
        print(report)
        assert report.passed(4.0), f"\n{report}"
    elapsed = time.perf_counter() - t0
    assert elapsed < 600.0, f"joint-distribution test took {elapsed:.0f}s"


@pytest.mark.slow
def test_criterion_5_rank_calibration():
    """Simulation-based calibration on all four families.

    200 prior-predictive replications at T=50, fit with a reduced budget
    (1k burn-in, 5k draws); the posterior ranks of the generating gate
    probability, family scale, and mid-series log-intensity must pass
    chi-square uniformity at p > 0.01.  Ranks are taken among draws
    thinned to near-independence (thin 100, beyond the measured
    autocorrelation time of the slowest variant), as rank uniformity
    presumes.  Under thirty minutes.
    """
    t0 = time.perf_counter()
    for variant in VARIANTS:
        report = simulation_based_calibration(
            variant, T=50, n_reps=200, n_burn=1000, n_draws=5000,
            thin=100, seed=50, n_jobs=1)
        print(report)
        for name, p in report.p_values().items():
            assert p > 0.01, f"{variant}/{name}: chi-square p={p:.5f}"
    elapsed = time.perf_counter() - t0
    assert elapsed < 1800.0, f"rank calibration took {elapsed:.0f}s"


@pytest.mark.slow
def test_criterion_6_synthetic_tail_coverage():
    """Tail calibration of the volatility variant at desk scale.

    A T=400 synthetic series from the stochastic-volatility generator is
    run through a 150-window rolling backtest at a reduced budget; the
    conditional-flavour
    empirical coverage must land in [0.85, 0.95] at the 90% quantile and
    [0.96, 1.0] at the 99% quantile.  Under one hour.
    """
    t0 = time.perf_counter()
    series, _ = simulate_series(
        "sv", T=400, seed=12, pi=0.9, z0=math.log(150.0),
        params={"mu": -4.0, "phi": 0.95, "sigma_xi2": 0.1})
    plan = BacktestPlan(n_windows=150, n_burn=500, n_draws=2000, thin=10,
                        seed=6, variants=("sv",), n_jobs=1)
    result = run_backtest(series, plan, dataset="synthetic-sv")
    assert not result.failures, result.failures
    row = result.summary(conditional=True)[0]
    print(f"coverage on {row['n']} positive-outcome windows: "
          f"q90={row['q90']:.4f} q99={row['q99']:.4f} "
          f"(LPS={row['LPS']:.1f}, corr={row['Corr']:.3f})")
    assert 0.85 <= row["q90"] <= 0.95
    assert 0.96 <= row["q99"] <= 1.00
    elapsed = time.perf_counter() - t0
    assert elapsed < 3600.0, f"coverage backtest took {elapsed:.0f}s"


@pytest.mark.slow
@pytest.mark.skipif(
    not (HAVE_DATA and RUN_FULL),
    reason="needs data/italy.csv and data/uk.csv (scripts/fetch_data.py) "
           "and ZIPVOL_RUN_FULL_BACKTEST=1; runs for hours")
def test_criterion_7_real_data_ordering():
    """Full 250-window backtests on the two arrival series.

    The volatility variant must attain the highest conditional log
    predictive score on both datasets, and its empirical q95/q99 coverage
    must fall within 0.03 of the reference values for these series.  Exact
    scores are not expected to reproduce (Monte Carlo noise, possible
    upstream data revisions); the ranking and the coverage bands are the
    criterion.
    """
    reference = {
        "italy": {"q95": 0.955, "q99": 0.992},
        "uk": {"q95": 0.941, "q99": 0.991},
    }
    for name, path in (("italy", DATA_ITALY), ("uk", DATA_UK)):
        series = read_series_csv(path)
        plan = BacktestPlan(n_windows=250, n_burn=2000, n_draws=10000,
                            thin=10, seed=7, n_jobs=1)
        result = run_backtest(series, plan, dataset=name)
        rows = result.summary(conditional=True)
        for row in rows:
            print(name, row["model"], f"LPS={row['LPS']:.3f}",
                  f"q95={row['q95']:.3f}", f"q99={row['q99']:.3f}")
        best = max(rows, key=lambda r: r["LPS"])
        assert best["model"] == "sv", (
            f"{name}: best LPS is {best['model']}, not sv")
        sv = next(r for r in rows if r["model"] == "sv")
        for key, want in reference[name].items():
            assert abs(sv[key] - want) <= 0.03, (
                f"{name}: {key}={sv[key]:.3f} vs reference {want}")


@pytest.mark.slow
@pytest.mark.skipif(
    not HAVE_DATA,
    reason="needs data/italy.csv and data/uk.csv (scripts/fetch_data.py)")
def test_criterion_8_real_data_gate_probability():
    """Full-sample volatility fits recover the documented gate levels.

    The posterior mean probability of an open sampling gate should land
    near 0.96 on the Italy series and 0.85 on the UK series, within 0.03.
    """
    reference = {"italy": (DATA_ITALY, 0.96), "uk": (DATA_UK, 0.85)}
    for name, (path, want) in reference.items():
        series = read_series_csv(path)
        config = McmcConfig(variant="sv", n_burn=2000, n_draws=10000,
                            seed=8, store_paths=False)
        store = run_chain(series, config)
        got = float(np.mean(store.pi))
        print(f"{name}: posterior mean gate probability {got:.4f} "
              f"(reference {want})")
        assert abs(got - want) <= 0.03
