"""Synthetic data generation from the model's own generative process.

Used by the CLI `simulate` subcommand, by calibration tests, and by the
coverage benchmark.  Parameters are fixed by the caller; the defaults give
series that look like weekly operational counts (tens to low thousands,
occasional structural zeros, slowly wandering level).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .counts import CountSeries, safe_poisson, week_labels
from .innovations import VARIANTS

DEFAULT_PARAMS = {
    "gaussian": {"sigma2": 0.04},
    "student_t": {"sigma2": 0.02, "nu": 5.0},
    "mixture": {"sigma2": 0.02, "eta": (0.85, 0.15), "comp_var": (0.5, 8.0)},
    "sv": {"mu": -3.2, "phi": 0.95, "sigma_xi2": 0.1},
}


@dataclass(frozen=True)
class SimTruth:
    """Generating values behind a simulated series."""

    variant: str
    pi: float
    z0: float
    z: np.ndarray
    s: np.ndarray
    params: dict
    latents: dict = field(default_factory=dict)

    @property
    def h(self) -> np.ndarray | None:
        return self.latents.get("h")


def draw_increments(variant: str, n: int, rng: np.random.Generator,
                    params: dict):
    """Draw n random-walk increments.

    Returns (dz, latents) where latents carries the per-increment mixing
    variables of the family: omega for student_t, rho for mixture, h for sv,
    empty for gaussian.  Drawing the mixing variables explicitly keeps this
    generator usable as the exact joint-draw counterpart of the sampler.
    """
    if variant == "gaussian":
        return rng.normal(0.0, math.sqrt(params["sigma2"]), n), {}
    if variant == "student_t":
        half_nu = 0.5 * params["nu"]
        omega = rng.standard_gamma(half_nu, n) / half_nu
        sd = np.sqrt(params["sigma2"] / omega)
        return rng.normal(0.0, 1.0, n) * sd, {"omega": omega}
    if variant == "mixture":
        eta = np.asarray(params["eta"], dtype=np.float64)
        comp_var = np.asarray(params["comp_var"], dtype=np.float64)
        rho = rng.choice(eta.size, size=n, p=eta / eta.sum())
        sd = np.sqrt(params["sigma2"] * comp_var[rho])
        return rng.normal(0.0, 1.0, n) * sd, {"rho": rho}
    if variant == "sv":
        mu, phi = params["mu"], params["phi"]
        sd_xi = math.sqrt(params["sigma_xi2"])
        h = np.empty(n)
        h[0] = mu + rng.normal(0.0, sd_xi / math.sqrt(1.0 - phi * phi))
        for t in range(1, n):
            h[t] = mu + phi * (h[t - 1] - mu) + rng.normal(0.0, sd_xi)
        with np.errstate(over="ignore"):
            sd = np.exp(0.5 * h)
        return rng.normal(0.0, 1.0, n) * sd, {"h": h}
    raise ValueError(
        f"unknown innovation variant {variant!r}; "
        f"expected one of {', '.join(VARIANTS)}")


def simulate_counts(z: np.ndarray, s: np.ndarray,
                    rng: np.random.Generator) -> np.ndarray:
    """Counts given the latent path and gates: 0 when closed, Poisson else."""
    with np.errstate(over="ignore"):
        lam = np.exp(z)
    y = np.zeros(z.size, dtype=np.int64)
    for t in range(z.size):
        if s[t]:
            y[t] = safe_poisson(rng, lam[t])
    return y


def simulate_series(variant: str, T: int, seed: int = 0,
                    start: str = "2015-W01", pi: float = 0.9,
                    z0: float | None = None,
                    params: dict | None = None):
    """Generate one series; returns (CountSeries, SimTruth)."""
    if T < 2:
        raise ValueError("need at least two weeks")
    # boundary values allowed here: pi=1 gives a plain Poisson series,
    # pi=0 an all-zero one; only inference needs an interior value
    if not 0.0 <= pi <= 1.0:
        raise ValueError("pi must lie in [0, 1]")
    if variant not in VARIANTS:
        raise ValueError(
            f"unknown innovation variant {variant!r}; "
            f"expected one of {', '.join(VARIANTS)}")
    merged = dict(DEFAULT_PARAMS[variant])
    if params:
        merged.update(params)
    rng = np.random.default_rng(seed)
    z0 = math.log(50.0) if z0 is None else float(z0)

    dz, latents = draw_increments(variant, T, rng, merged)
    z = z0 + np.cumsum(dz)
    s = (rng.random(T) < pi).astype(np.int8)
    y = simulate_counts(z, s, rng)

    series = CountSeries(week_labels(start, T), y)
    truth = SimTruth(variant=variant, pi=pi, z0=z0, z=z, s=s,
                     params=merged, latents=latents)
    return series, truth
