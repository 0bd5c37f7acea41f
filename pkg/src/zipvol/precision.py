"""Singular tridiagonal precision of the Gaussian random-walk prior.

The augmented latent path (z_0, z_1..z_T, z_{T+1}) is a priori Gaussian with
precision D'KD, where K holds one precision per increment.  Only the
tridiagonal band is ever formed; the dense matrix exists solely in test
oracles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TridiagonalPrecision:
    """Band storage of the (T+2)x(T+2) random-walk precision.

    ``k`` are the increment precisions k_1..k_{T+1}; ``diag`` and ``offdiag``
    hold the main and first off-diagonal.  Every row sums to zero, so the
    matrix is singular with rank T+1 (the flat direction is the constant
    shift of the whole path).
    """

    k: np.ndarray
    diag: np.ndarray
    offdiag: np.ndarray

    @property
    def n_sites(self) -> int:
        return self.diag.size

    def dense(self) -> np.ndarray:
        """Materialize the full matrix; intended for small-T diagnostics."""
        P = np.diag(self.diag)
        n = self.n_sites
        P[np.arange(n - 1), np.arange(1, n)] = self.offdiag
        P[np.arange(1, n), np.arange(n - 1)] = self.offdiag
        return P


def build_precision(k) -> TridiagonalPrecision:
    """Assemble the banded D'KD product from increment precisions ``k``."""
    k = np.ascontiguousarray(k, dtype=np.float64)
    if k.ndim != 1 or k.size < 1:
        raise ValueError("invalid precision")
    if not np.all(np.isfinite(k)) or np.any(k <= 0):
        raise ValueError("invalid precision")
    diag = np.empty(k.size + 1)
    diag[0] = k[0]
    diag[-1] = k[-1]
    diag[1:-1] = k[:-1] + k[1:]
    return TridiagonalPrecision(k=k, diag=diag, offdiag=-k)


def conditional_moments(t: int, z: np.ndarray, P: TridiagonalPrecision):
    """Gaussian conditional mean and variance of site ``t`` given the rest.

    Uses only the tridiagonal neighbors: m_t is the precision-weighted
    average of the adjacent sites and v_t the reciprocal row diagonal.
    """
    n = P.n_sites
    if not 0 <= t < n:
        raise IndexError(f"site {t} outside 0..{n - 1}")
    k = P.k
    if t == 0:
        return float(z[1]), 1.0 / k[0]
    if t == n - 1:
        return float(z[t - 1]), 1.0 / k[t - 1]
    prec = k[t - 1] + k[t]
    m = (k[t - 1] * z[t - 1] + k[t] * z[t + 1]) / prec
    return float(m), 1.0 / prec
