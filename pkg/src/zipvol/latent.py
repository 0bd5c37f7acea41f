"""Single-site updates of the augmented latent state, gate indicators and pi.

The engine drives whole sweeps through the compiled kernel; the functions
here expose the same moves one site at a time for tests and for anyone
composing a custom sampler.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from zipvol.precision import TridiagonalPrecision, conditional_moments

TARGET_ACCEPT = 0.234
INITIAL_PROPOSAL_SCALE = 0.1
PI_CLAMP = 1e-12


@dataclass
class LatentState:
    """Augmented log-intensity path with gate indicators and MH bookkeeping.

    ``z`` has length T+2 (initial value, T observation sites, one-step-ahead
    site); ``s`` has length T.  ``log_scales`` are per-site log proposal
    standard deviations, adapted during sampling.
    """

    z: np.ndarray
    s: np.ndarray
    pi: float
    log_scales: np.ndarray = None
    accept_counts: np.ndarray = None
    attempt_counts: np.ndarray = None

    def __post_init__(self):
        self.z = np.ascontiguousarray(self.z, dtype=np.float64)
        self.s = np.ascontiguousarray(self.s, dtype=np.int8)
        if self.s.size != self.z.size - 2:
            raise ValueError("s must have length T = len(z) - 2")
        if not 0.0 < self.pi < 1.0:
            raise ValueError("pi must lie strictly inside (0, 1)")
        if self.log_scales is None:
            self.log_scales = np.full(self.z.size, math.log(INITIAL_PROPOSAL_SCALE))
        self.log_scales = np.ascontiguousarray(self.log_scales, dtype=np.float64)
        if self.accept_counts is None:
            self.accept_counts = np.zeros(self.z.size, dtype=np.int64)
        if self.attempt_counts is None:
            self.attempt_counts = np.zeros(self.z.size, dtype=np.int64)

    @property
    def proposal_scales(self) -> np.ndarray:
        return np.exp(self.log_scales)


def adapt_proposal(scale: float, accepted: bool, iteration: int,
                   target: float = TARGET_ACCEPT) -> float:
    """Robbins-Monro proposal-scale update with diminishing step.

    The log scale moves by ``min(0.05, n^{-1/2})`` times the acceptance
    surplus over ``target``, so repeated acceptance inflates the scale,
    repeated rejection shrinks it, and the long-run acceptance rate settles
    at ``target``.
    """
    if iteration < 1:
        raise ValueError("iteration must be >= 1")
    gamma = min(0.05, iteration ** -0.5)
    return scale * math.exp(gamma * ((1.0 if accepted else 0.0) - target))


def update_latent_site(t: int, state: LatentState, y_t: float, s_t: int,
                       P: TridiagonalPrecision, rng: np.random.Generator,
                       z0_prior: tuple[float, float] | None = None) -> bool:
    """Update z_t in place; returns True when the move was accepted.

    Endpoint sites and sites with an inactive gate draw exactly from the
    Gaussian conditional (always "accepted"); active sites take one
    random-walk Metropolis step against the Gaussian-times-Poisson target.
    ``z0_prior`` optionally supplies (mean, variance) of a proper prior on
    z_0, folded into site 0 only.
    """
    z = state.z
    n = z.size
    m, v = conditional_moments(t, z, P)
    prec = 1.0 / v
    if t == 0 and z0_prior is not None:
        mu0, var0 = z0_prior
        p0 = 1.0 / var0
        m = (prec * m + p0 * mu0) / (prec + p0)
        prec = prec + p0
    if t == 0 or t == n - 1 or s_t == 0:
        z[t] = m + rng.standard_normal() / math.sqrt(prec)
        return True
    cur = z[t]
    prop = cur + math.exp(state.log_scales[t]) * rng.standard_normal()
    dq = 0.5 * ((cur - m) ** 2 - (prop - m) ** 2) * prec
    try:
        dpois = y_t * (prop - cur) - (math.exp(prop) - math.exp(cur))
    except OverflowError:
        dpois = -math.inf if prop > cur else math.inf
    state.attempt_counts[t] += 1
    u = rng.random()
    log_u = math.log(u) if u > 0.0 else -math.inf
    if log_u < dq + dpois:
        z[t] = prop
        state.accept_counts[t] += 1
        return True
    return False


def update_indicators(y: np.ndarray, z: np.ndarray, pi: float,
                      rng: np.random.Generator) -> np.ndarray:
    """Draw the gate indicators: forced open at positive counts, Bernoulli
    with posterior odds pi*exp(-lambda) vs (1-pi) at observed zeros."""
    lam = np.exp(np.minimum(z, 700.0))
    p_zero = np.exp(-lam)
    p_active = pi * p_zero / ((1.0 - pi) + pi * p_zero)
    u = rng.random(y.size)
    s = np.where(y > 0, True, u < p_active)
    return s.astype(np.int8)


def update_pi(s: np.ndarray, rng: np.random.Generator,
              a: float = 0.5, b: float = 0.5) -> float:
    """Beta draw for the sampling-path probability given the indicators."""
    total = int(np.sum(s))
    draw = rng.beta(a + total, b + s.size - total)
    return float(min(max(draw, PI_CLAMP), 1.0 - PI_CLAMP))
