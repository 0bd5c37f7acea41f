"""Innovation families for the random-walk increments of the log-intensity.

Four interchangeable distributions govern dz_t = z_t - z_{t-1}:

  gaussian    dz_t ~ N(0, sigma2)
  student_t   dz_t ~ t_nu(0, sigma2), via the scale mixture omega_t
  mixture     dz_t ~ sum_h eta_h N(0, sigma2 * comp_var[h])
  sv          dz_t ~ N(0, exp(h_t)), h_t a stationary AR(1) in logs

Every family exposes the same two operations: `precisions` turns the current
parameters into the per-increment precision vector k consumed by the latent
update, and an update function refreshes the family's parameters given the
current increments.  Update functions mutate the state in place and draw from
`rng` in a fixed order, so runs are reproducible given the seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded, solve_banded
from scipy.special import gammaln
from scipy.stats import geninvgauss

from .latent import INITIAL_PROPOSAL_SCALE, TARGET_ACCEPT
from .priors import PriorConfig

VARIANTS = ("gaussian", "student_t", "mixture", "sv")

# Seven-component normal mixture approximation to the log chi-square(1)
# density, used to linearize u_t = h_t + log(chi2_1) for the volatility path
# draw.  Means already absorb the -1.2704 offset of log chi-square(1).
KSC_WEIGHTS = np.array(
    [0.00730, 0.10556, 0.00002, 0.04395, 0.34001, 0.24566, 0.25750])
KSC_MEANS = np.array(
    [-11.40039, -5.24321, -9.83726, 1.50746, -0.65098, 0.52478, -2.35859])
KSC_VARS = np.array(
    [5.79596, 2.61369, 5.17950, 0.16735, 0.64009, 0.34023, 1.26261])
_KSC_LOGW = np.log(KSC_WEIGHTS)
_KSC_LOGV = np.log(KSC_VARS)

# Offset added to squared increments before taking logs; keeps the
# linearized observation finite when an increment is exactly zero.
SV_OFFSET = 1e-6


@dataclass
class InnovationState:
    """Current parameters of one innovation family.

    Only the fields relevant to `variant` are populated; the rest stay None.
    `n_inc` is the number of increments, one more than the number of
    observations because the path carries a one-step-ahead site.
    """

    variant: str
    n_inc: int
    sigma2: float = 1.0
    # student_t
    nu: float = 10.0
    omega: np.ndarray | None = None
    # mixture
    eta: np.ndarray | None = None
    comp_var: np.ndarray | None = None
    rho: np.ndarray | None = None
    # sv
    h: np.ndarray | None = None
    mu: float = 0.0
    phi: float = 0.9
    sigma_xi2: float = 0.1
    # adaptive proposal bookkeeping for the two Metropolis scalars
    nu_log_scale: float = field(default=math.log(INITIAL_PROPOSAL_SCALE))
    nu_accepts: int = 0
    nu_attempts: int = 0
    phi_log_scale: float = field(default=math.log(INITIAL_PROPOSAL_SCALE))
    phi_accepts: int = 0
    phi_attempts: int = 0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(
                f"unknown innovation variant {self.variant!r}; "
                f"expected one of {', '.join(VARIANTS)}")
        if self.n_inc < 1:
            raise ValueError("need at least one increment")


def init_innovations(variant: str, n_inc: int, rng: np.random.Generator,
                     n_components: int = 2) -> InnovationState:
    """Build a starting state for the given family."""
    state = InnovationState(variant=variant, n_inc=n_inc)
    if variant == "student_t":
        state.omega = np.ones(n_inc)
    elif variant == "mixture":
        if n_components < 2:
            raise ValueError("mixture needs at least two components")
        state.eta = np.full(n_components, 1.0 / n_components)
        state.comp_var = np.geomspace(0.5, 2.0, n_components)
        state.rho = rng.integers(0, n_components, size=n_inc)
    elif variant == "sv":
        state.h = np.zeros(n_inc)
    return state


def precisions(state: InnovationState) -> np.ndarray:
    """Per-increment precision vector k implied by the current parameters."""
    if state.variant == "gaussian":
        k = np.full(state.n_inc, 1.0 / state.sigma2)
    elif state.variant == "student_t":
        k = state.omega / state.sigma2
    elif state.variant == "mixture":
        k = 1.0 / (state.sigma2 * state.comp_var[state.rho])
    else:
        with np.errstate(over="ignore"):
            k = np.exp(-state.h)
    if k.shape != (state.n_inc,) or not np.all(np.isfinite(k)) or np.any(k <= 0):
        raise ValueError(f"degenerate precision in {state.variant} innovations")
    return k


def _sample_categorical(logp: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Draw one index per row of unnormalized log probabilities."""
    p = np.exp(logp - logp.max(axis=1, keepdims=True))
    p /= p.sum(axis=1, keepdims=True)
    cum = np.cumsum(p, axis=1)
    u = rng.random(p.shape[0])
    idx = (u[:, None] > cum).sum(axis=1)
    return np.minimum(idx, p.shape[1] - 1)


def _inverse_gamma(shape, rate, rng: np.random.Generator):
    return rate / rng.standard_gamma(shape)


def gaussian_update(dz: np.ndarray, state: InnovationState,
                    prior: PriorConfig, rng: np.random.Generator) -> None:
    """Conjugate refresh of the single innovation variance."""
    shape = prior.ig_shape + 0.5 * dz.size
    rate = prior.ig_rate + 0.5 * float(dz @ dz)
    state.sigma2 = float(_inverse_gamma(shape, rate, rng))


def student_t_update(dz: np.ndarray, state: InnovationState,
                     prior: PriorConfig, rng: np.random.Generator,
                     adapt_step: float = 0.0) -> None:
    """Refresh mixing weights, scale, and degrees of freedom."""
    n = dz.size
    half_nu = 0.5 * state.nu
    rate = half_nu + dz * dz / (2.0 * state.sigma2)
    state.omega = rng.standard_gamma(half_nu + 0.5, size=n) / rate
    shape = prior.ig_shape + 0.5 * n
    srate = prior.ig_rate + 0.5 * float(state.omega @ (dz * dz))
    state.sigma2 = float(_inverse_gamma(shape, srate, rng))
    nu_mh_step(state, prior, rng, adapt_step)


def _omega_loglik(nu: float, sum_log_omega: float, sum_omega: float,
                  n: int) -> float:
    half = 0.5 * nu
    return (n * (half * math.log(half) - gammaln(half))
            + (half - 1.0) * sum_log_omega - half * sum_omega)


def nu_mh_step(state: InnovationState, prior: PriorConfig,
               rng: np.random.Generator, adapt_step: float = 0.0) -> bool:
    """Multiplicative random-walk step on the degrees of freedom.

    The proposal is a normal step on log nu, so the ratio carries a nu*/nu
    Jacobian.  Proposals at or below the prior shift are rejected outright.
    """
    omega = state.omega
    n = omega.size
    sum_log = float(np.log(omega).sum())
    sum_om = float(omega.sum())
    step = math.exp(state.nu_log_scale) * rng.standard_normal()
    prop = state.nu * math.exp(step)
    u = rng.random()
    state.nu_attempts += 1
    accepted = False
    if prop > prior.nu_shift:
        logr = (_omega_loglik(prop, sum_log, sum_om, n)
                - _omega_loglik(state.nu, sum_log, sum_om, n)
                - prior.nu_rate * (prop - state.nu)
                + math.log(prop) - math.log(state.nu))
        log_u = math.log(u) if u > 0.0 else -math.inf
        accepted = log_u < logr
    if accepted:
        state.nu = prop
        state.nu_accepts += 1
    if adapt_step > 0.0:
        state.nu_log_scale += adapt_step * (float(accepted) - TARGET_ACCEPT)
    return accepted


def mixture_update(dz: np.ndarray, state: InnovationState,
                   prior: PriorConfig, rng: np.random.Generator) -> None:
    """Refresh allocations, weights, and the component and global scales."""
    n = dz.size
    n_comp = state.eta.size
    var = state.sigma2 * state.comp_var
    logp = (np.log(np.maximum(state.eta, 1e-300))[None, :]
            - 0.5 * np.log(2.0 * math.pi * var)[None, :]
            - dz[:, None] ** 2 / (2.0 * var)[None, :])
    state.rho = _sample_categorical(logp, rng)
    counts = np.bincount(state.rho, minlength=n_comp)
    state.eta = rng.dirichlet(prior.dirichlet_conc + counts)
    # empty components fall back to their prior automatically
    ssq = np.bincount(state.rho, weights=dz * dz, minlength=n_comp)
    shape = prior.ig_shape + 0.5 * counts
    rate = prior.ig_rate + ssq / (2.0 * state.sigma2)
    state.comp_var = _inverse_gamma(shape, rate, rng)
    gshape = prior.ig_shape + 0.5 * n
    grate = prior.ig_rate + 0.5 * float(np.sum(dz * dz / state.comp_var[state.rho]))
    state.sigma2 = float(_inverse_gamma(gshape, grate, rng))


def _ar_logpost(phi: float, d: np.ndarray, sigma_xi2: float,
                prior: PriorConfig) -> float:
    """Log conditional of the AR coefficient given the centered path d."""
    resid = d[1:] - phi * d[:-1]
    return (0.5 * math.log1p(-phi * phi)
            - (1.0 - phi * phi) * d[0] * d[0] / (2.0 * sigma_xi2)
            - float(resid @ resid) / (2.0 * sigma_xi2)
            + (prior.phi_a - 1.0) * math.log((1.0 + phi) / 2.0)
            + (prior.phi_b - 1.0) * math.log((1.0 - phi) / 2.0))


def sv_update(dz: np.ndarray, state: InnovationState, prior: PriorConfig,
              rng: np.random.Generator, adapt_step: float = 0.0) -> None:
    """Refresh the log-variance path and its AR(1) hyperparameters.

    The squared increments are linearized with the seven-component mixture,
    after which the whole path is drawn jointly from its banded Gaussian
    conditional.  mu is conjugate, phi is a random-walk Metropolis step, and
    the AR innovation variance has a generalized-inverse-Gaussian conditional
    under its gamma prior.
    """
    n = dz.size
    u_obs = np.log(dz * dz + SV_OFFSET)
    resid = u_obs[:, None] - state.h[:, None] - KSC_MEANS[None, :]
    logp = (_KSC_LOGW[None, :] - 0.5 * _KSC_LOGV[None, :]
            - resid ** 2 / (2.0 * KSC_VARS)[None, :])
    r = _sample_categorical(logp, rng)
    w = KSC_VARS[r]
    b = KSC_MEANS[r]

    # joint draw of the centered path g = h - mu from a tridiagonal normal
    phi, s2 = state.phi, state.sigma_xi2
    diag = np.full(n, (1.0 + phi * phi) / s2)
    diag[0] = 1.0 / s2
    diag[-1] = 1.0 / s2
    diag += 1.0 / w
    ab = np.zeros((2, n))
    ab[0, 1:] = -phi / s2
    ab[1, :] = diag
    chol = cholesky_banded(ab)
    c = (u_obs - b - state.mu) / w
    mean = cho_solve_banded((chol, False), c)
    g = mean + solve_banded((0, 1), chol, rng.standard_normal(n))
    state.h = state.mu + g

    # conjugate level
    hpath = state.h
    prec = (1.0 / prior.mu_var
            + ((1.0 - phi * phi) + (n - 1) * (1.0 - phi) ** 2) / s2)
    num = (prior.mu_mean / prior.mu_var
           + ((1.0 - phi * phi) * hpath[0]
              + (1.0 - phi) * float(np.sum(hpath[1:] - phi * hpath[:-1]))) / s2)
    state.mu = num / prec + rng.standard_normal() / math.sqrt(prec)

    # random-walk step on the persistence, constrained to (-1, 1)
    d = hpath - state.mu
    prop = phi + math.exp(state.phi_log_scale) * rng.standard_normal()
    u = rng.random()
    state.phi_attempts += 1
    accepted = False
    if abs(prop) < 1.0:
        logr = (_ar_logpost(prop, d, s2, prior)
                - _ar_logpost(phi, d, s2, prior))
        log_u = math.log(u) if u > 0.0 else -math.inf
        accepted = log_u < logr
    if accepted:
        state.phi = prop
        state.phi_accepts += 1
    if adapt_step > 0.0:
        state.phi_log_scale += adapt_step * (float(accepted) - TARGET_ACCEPT)

    # generalized-inverse-Gaussian draw for the AR innovation variance
    phi = state.phi
    ar_resid = d[1:] - phi * d[:-1]
    ssq = (1.0 - phi * phi) * d[0] * d[0] + float(ar_resid @ ar_resid)
    p = prior.sigma_xi_shape - 0.5 * n
    a = 2.0 * prior.sigma_xi_rate
    bb = max(ssq, 1e-300)
    state.sigma_xi2 = float(geninvgauss.rvs(
        p, math.sqrt(a * bb), scale=math.sqrt(bb / a), random_state=rng))


def update_innovations(dz: np.ndarray, state: InnovationState,
                       prior: PriorConfig, rng: np.random.Generator,
                       adapt_step: float = 0.0) -> None:
    """Dispatch the refresh for the state's family."""
    if dz.shape != (state.n_inc,):
        raise ValueError(
            f"expected {state.n_inc} increments, got {dz.shape}")
    if state.variant == "gaussian":
        gaussian_update(dz, state, prior, rng)
    elif state.variant == "student_t":
        student_t_update(dz, state, prior, rng, adapt_step)
    elif state.variant == "mixture":
        mixture_update(dz, state, prior, rng)
    else:
        sv_update(dz, state, prior, rng, adapt_step)
