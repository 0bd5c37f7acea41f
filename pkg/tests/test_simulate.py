"""Synthetic series generation: boundary cases and moment checks."""

import math

import numpy as np
import pytest

from zipvol.simulate import simulate_series


class TestBoundaries:
    def test_pi_one_is_plain_poisson(self):
        series, truth = simulate_series(
            "gaussian", T=20000, seed=7, pi=1.0,
            z0=math.log(10.0), params={"sigma2": 0.0})
        y = series.counts
        assert np.all(truth.s == 1)
        assert np.all(truth.z == truth.z[0])
        assert np.mean(y) == pytest.approx(10.0, rel=0.05)
        assert np.var(y) == pytest.approx(10.0, rel=0.05)

    def test_pi_zero_is_all_zeros(self):
        series, truth = simulate_series(
            "gaussian", T=500, seed=3, pi=0.0, z0=math.log(50.0))
        assert np.all(series.counts == 0)
        assert np.all(truth.s == 0)

    def test_pi_outside_unit_interval_rejected(self):
        for bad in (-0.01, 1.01):
            with pytest.raises(ValueError):
                simulate_series("gaussian", T=10, seed=0, pi=bad)

    def test_unknown_variant_rejected(self):
        with pytest.raises(ValueError):
            simulate_series("cauchy", T=10, seed=0)


class TestTruthRecord:
    def test_shapes_and_labels(self):
        series, truth = simulate_series("sv", T=120, seed=11,
                                        start="2019-W01")
        assert len(series) == 120
        assert series.labels[0] == "2019-W01"
        assert truth.z.shape == (120,)
        assert truth.s.shape == (120,)
        assert set(np.unique(truth.s)) <= {0, 1}
        # log-volatility path: one value per increment, none for the anchor
        assert truth.h is not None
        assert truth.h.shape == (120,)

    def test_gate_rate_matches_pi(self):
        _, truth = simulate_series("gaussian", T=50000, seed=5, pi=0.8)
        assert np.mean(truth.s) == pytest.approx(0.8, abs=0.01)

    def test_counts_are_poisson_at_open_gates(self):
        series, truth = simulate_series(
            "gaussian", T=30000, seed=9, pi=0.7,
            z0=math.log(30.0), params={"sigma2": 0.0})
        open_counts = series.counts[truth.s == 1]
        assert np.mean(open_counts) == pytest.approx(30.0, rel=0.05)
        assert np.var(open_counts) == pytest.approx(30.0, rel=0.05)

    def test_same_seed_reproduces(self):
        a_series, a_truth = simulate_series("mixture", T=200, seed=21)
        b_series, b_truth = simulate_series("mixture", T=200, seed=21)
        np.testing.assert_array_equal(a_series.counts, b_series.counts)
        np.testing.assert_array_equal(a_truth.z, b_truth.z)
        c_series, _ = simulate_series("mixture", T=200, seed=22)
        assert not np.array_equal(a_series.counts, c_series.counts)


class TestIncrementDistributions:
    def test_gaussian_increment_variance(self):
        _, truth = simulate_series(
            "gaussian", T=20000, seed=13, pi=1.0,
            params={"sigma2": 0.09})
        dz = np.diff(np.concatenate(([truth.z0], truth.z)))
        assert np.var(dz) == pytest.approx(0.09, rel=0.05)

    def test_student_t_increment_variance(self):
        # t_nu(0, sigma2) has variance sigma2 * nu / (nu - 2)
        _, truth = simulate_series(
            "student_t", T=200000, seed=17, pi=1.0,
            params={"sigma2": 0.04, "nu": 8.0})
        dz = np.diff(np.concatenate(([truth.z0], truth.z)))
        assert np.var(dz) == pytest.approx(0.04 * 8.0 / 6.0, rel=0.05)

    def test_mixture_increment_variance(self):
        _, truth = simulate_series(
            "mixture", T=100000, seed=19, pi=1.0,
            params={"sigma2": 0.05, "eta": (0.9, 0.1),
                    "comp_var": (1.0, 9.0)})
        dz = np.diff(np.concatenate(([truth.z0], truth.z)))
        expect = 0.05 * (0.9 * 1.0 + 0.1 * 9.0)
        assert np.var(dz) == pytest.approx(expect, rel=0.05)

    def test_sv_increment_variance_is_lognormal_mean(self):
        # stationary AR(1) log-volatility: Var(dz) = E[e^h]
        #                                          = exp(mu + s2/(2(1-phi^2)))
        mu, phi, s2 = -1.0, 0.95, 0.05
        _, truth = simulate_series(
            "sv", T=100000, seed=23, pi=1.0,
            params={"mu": mu, "phi": phi, "sigma_xi2": s2})
        dz = np.diff(np.concatenate(([truth.z0], truth.z)))
        expect = math.exp(mu + s2 / (2.0 * (1.0 - phi * phi)))
        assert np.var(dz) == pytest.approx(expect, rel=0.10)

    def test_sv_h_path_is_stationary_ar1(self):
        mu, phi, s2 = -0.5, 0.9, 0.04
        _, truth = simulate_series(
            "sv", T=200000, seed=29, pi=1.0,
            params={"mu": mu, "phi": phi, "sigma_xi2": s2})
        h = truth.h
        assert np.mean(h) == pytest.approx(mu, abs=0.05)
        assert np.var(h) == pytest.approx(s2 / (1.0 - phi * phi), rel=0.10)
        lag1 = np.corrcoef(h[:-1], h[1:])[0, 1]
        assert lag1 == pytest.approx(phi, abs=0.02)
