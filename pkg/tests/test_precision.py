"""Tridiagonal random-walk precision algebra against dense oracles."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zipvol.precision import TridiagonalPrecision, build_precision, conditional_moments


def dense_dtkd(k: np.ndarray) -> np.ndarray:
    """Dense D'KD for the first-difference matrix D (shape (n, n+1))."""
    n = k.size
    D = np.zeros((n, n + 1))
    for i in range(n):
        D[i, i] = -1.0
        D[i, i + 1] = 1.0
    return D.T @ np.diag(k) @ D


class TestBuildPrecision:
    def test_frozen_small_example(self):
        P = build_precision(np.array([1.0, 3.0]))
        assert np.allclose(P.diag, [1.0, 4.0, 3.0])
        assert np.allclose(P.offdiag, [-1.0, -3.0])

    @given(st.lists(st.floats(0.01, 100.0), min_size=1, max_size=12))
    @settings(max_examples=200, deadline=None)
    def test_matches_dense_product(self, kl):
        k = np.array(kl)
        P = build_precision(k)
        assert np.allclose(P.dense(), dense_dtkd(k), atol=1e-12)

    @given(st.lists(st.floats(0.01, 100.0), min_size=1, max_size=12))
    @settings(max_examples=100, deadline=None)
    def test_annihilates_constants(self, kl):
        # a random walk precision has the constant vector in its null space
        P = build_precision(np.array(kl)).dense()
        assert np.allclose(P @ np.ones(P.shape[0]), 0.0, atol=1e-10)

    def test_rejects_nonpositive_and_nonfinite(self):
        for bad in ([0.0, 1.0], [1.0, -2.0], [np.inf, 1.0], [np.nan]):
            with pytest.raises(ValueError):
                build_precision(np.array(bad))


class TestConditionalMoments:
    def test_frozen_interior_example(self):
        # increment precisions (1, 3), neighbors z0=0 and z2=4:
        # row precision 1+3=4, mean (1*0 + 3*4)/4 = 3, variance 1/4
        P = build_precision(np.array([1.0, 3.0]))
        m, v = conditional_moments(1, np.array([0.0, 99.0, 4.0]), P)
        assert m == pytest.approx(3.0, abs=1e-12)
        assert v == pytest.approx(0.25, abs=1e-12)

    def test_endpoints_have_single_neighbor(self):
        P = build_precision(np.array([2.0, 5.0]))
        z = np.array([7.0, 1.0, -3.0])
        m0, v0 = conditional_moments(0, z, P)
        assert (m0, v0) == (1.0, 0.5)
        m2, v2 = conditional_moments(2, z, P)
        assert (m2, v2) == (1.0, 0.2)

    @given(st.integers(0, 10**6))
    @settings(max_examples=100, deadline=None)
    def test_matches_dense_oracle(self, seed):
        rng = np.random.default_rng(seed)
        n_inc = int(rng.integers(1, 15))
        k = rng.uniform(0.05, 50.0, n_inc)
        z = rng.normal(0.0, 2.0, n_inc + 1)
        P = build_precision(k)
        dense = P.dense()
        for t in range(n_inc + 1):
            m, v = conditional_moments(t, z, P)
            prec_t = dense[t, t]
            cross = dense[t] @ z - dense[t, t] * z[t]
            assert v == pytest.approx(1.0 / prec_t, rel=1e-9)
            assert m == pytest.approx(-cross / prec_t, rel=1e-9, abs=1e-9)

    def test_out_of_range_site(self):
        P = build_precision(np.array([1.0]))
        with pytest.raises(IndexError):
            conditional_moments(2, np.array([0.0, 1.0]), P)
