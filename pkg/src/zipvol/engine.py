"""Posterior simulation engine.

One sweep visits four blocks in fixed order: (i) the latent log-intensity
path, site by site and then a global level-shift move, (ii) the
zero-inflation indicators, (iii) the gate probability, (iv) the innovation
parameters.  The latent path has T + 2 sites: a pre-sample anchor, one site
per observation, and a one-step-ahead site that only feels its left
neighbour, which is what makes the stored draws directly usable for density
forecasts.

Single-site updates alone mix the long-wavelength shape of the path in
O(length^2) sweeps wherever a long stretch of gates is closed: such a
stretch carries no Poisson terms, so its sites are held together only by
the increment springs and relax by diffusion.  Two extra moves inside the
latent block remove those slow modes exactly.  A global level shift moves
every site by a common delta (increments cancel, so only the open-site
Poisson terms and the anchor enter the acceptance ratio), and a bridge
redraw samples each maximal closed-gate stretch jointly from its exact
tridiagonal Gaussian conditional given the open sites around it.

All randomness flows through a single generator, so a run is reproducible
given (data, config, seed).  The normal and uniform variates consumed by the
latent sweep are pre-generated per sweep and passed to the kernel as arrays;
the compiled and pure-Python kernels therefore produce bit-identical chains.

`ChainState` exposes a single sweep as a fixed Markov transition; `run_chain`
drives it through burn-in and sampling.  Correctness harnesses reuse
`ChainState.sweep` directly so they exercise the exact production kernel.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from scipy.linalg import cho_solve_banded, cholesky_banded, solve_banded

from ._kernels import BACKEND, latent_sweep
from .counts import CountSeries, safe_poisson
from .innovations import (VARIANTS, InnovationState, init_innovations,
                          precisions, update_innovations)
from .latent import (INITIAL_PROPOSAL_SCALE, TARGET_ACCEPT,
                     update_indicators, update_pi)
from .priors import PriorConfig

# Robbins-Monro adaptation: step min(ADAPT_CAP, n^-1/2) toward the target
# acceptance rate, active during burn-in only so the post-burn kernel is a
# fixed Markov kernel.
ADAPT_CAP = 0.05


class NumericalError(RuntimeError):
    """A sampler block produced non-finite state; names block and iteration."""


@dataclass(frozen=True)
class McmcConfig:
    variant: str = "gaussian"
    n_burn: int = 5000
    n_draws: int = 50000
    thin: int = 10
    seed: int = 0
    z0_prior: str = "weak"  # "weak": N(anchor, z0_var); "flat": improper
    adapt: bool = True
    store_paths: bool = True
    n_components: int = 2

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(
                f"unknown model variant {self.variant!r}; "
                f"expected one of {', '.join(VARIANTS)}")
        if self.n_burn < 0 or self.n_draws < 1 or self.thin < 1:
            raise ValueError("need n_burn >= 0, n_draws >= 1, thin >= 1")
        if self.z0_prior not in ("weak", "flat"):
            raise ValueError("z0_prior must be 'weak' or 'flat'")
        if self.n_components < 2:
            raise ValueError("mixture needs at least two components")


def _anchor_mean(y: np.ndarray, prior: PriorConfig) -> float:
    if prior.z0_mean is not None:
        return float(prior.z0_mean)
    positive = y[y > 0]
    if positive.size == 0:
        return 0.0
    return float(np.log1p(positive.mean()))


class ChainState:
    """Mutable sampler state plus the one-sweep transition kernel.

    The constructor sets a data-driven starting point (latent path at
    log(1 + y), gates open at positive counts); harnesses that need to start
    from an exact joint draw overwrite z, s, pi, and innov afterwards.
    """

    def __init__(self, y: np.ndarray, config: McmcConfig,
                 prior: PriorConfig, rng: np.random.Generator):
        self.config = config
        self.prior = prior
        self.rng = rng
        self.y = np.asarray(y, dtype=np.float64)
        self.T = self.y.size
        n_sites = self.T + 2

        if config.z0_prior == "weak":
            self.z0_prec = 1.0 / prior.z0_var
            self.z0_mean = _anchor_mean(self.y, prior)
        else:
            self.z0_prec = 0.0
            self.z0_mean = 0.0

        self.z = np.empty(n_sites)
        self.z[1:self.T + 1] = np.log1p(self.y)
        self.z[0] = self.z[1]
        self.z[-1] = self.z[-2]
        self.s = (self.y > 0).astype(np.int8)
        self.pi = float((self.s.sum() + prior.pi_a)
                        / (self.T + prior.pi_a + prior.pi_b))
        self.innov = init_innovations(config.variant, self.T + 1, rng,
                                      config.n_components)
        self.log_scales = np.full(n_sites, math.log(INITIAL_PROPOSAL_SCALE))
        self.acc_sites = np.zeros(n_sites, dtype=np.int64)
        self.att_sites = np.zeros(n_sites, dtype=np.int64)
        self.level_log_scale = math.log(INITIAL_PROPOSAL_SCALE)
        self.acc_level = 0
        self.att_level = 0
        self.acc_bridge = 0
        self.att_bridge = 0
        self.iteration = 0

    def _level_step(self, gamma: float) -> None:
        """Metropolis shift of the whole latent path by a common delta.

        Every increment is invariant under the shift, so the innovation
        terms (and the volatility path) drop out of the acceptance ratio;
        only the Poisson terms at open observed sites and the anchor prior
        remain.  The proposal is symmetric normal with its own adapted
        scale.
        """
        rng = self.rng
        delta = math.exp(self.level_log_scale) * rng.standard_normal()
        open_ = self.s == 1
        y_open = self.y[open_]
        with np.errstate(over="ignore"):
            lam_open = np.exp(self.z[1:self.T + 1][open_])
        log_ratio = (delta * float(y_open.sum())
                     - math.expm1(delta) * float(lam_open.sum()))
        if self.z0_prec > 0.0:
            d0 = self.z[0] - self.z0_mean
            log_ratio -= self.z0_prec * delta * (d0 + 0.5 * delta)
        self.att_level += 1
        accepted = 0.0
        u = rng.random()
        if (-math.inf if u == 0.0 else math.log(u)) < log_ratio:
            self.z += delta
            self.acc_level += 1
            accepted = 1.0
        if gamma > 0.0:
            self.level_log_scale += gamma * (accepted - TARGET_ACCEPT)

    # bridge runs shorter than this relax quickly under the site pass, so
    # redrawing them jointly would only add banded-solver overhead
    MIN_BRIDGE_RUN = 3

    def _bridge_pass(self, k: np.ndarray, member: np.ndarray,
                     exp_sites: np.ndarray) -> None:
        """Blocked update of every long run of member sites.

        For a maximal run of consecutive members the increments-plus-anchor
        part of the conditional is Gaussian with tridiagonal precision:
        diagonal from the adjacent increment precisions (plus the anchor
        term at site 0), off-diagonal -k, linear term only where the run
        touches a fixed neighbour.  The run is proposed from that Gaussian
        in one banded solve and accepted against the omitted factors
        exp(-e^{z_t}) at the run's exp_sites, i.e. an independence
        Metropolis step with log ratio sum(e^{z}) - sum(e^{z'}).  A run
        with no exp_sites is drawn from its exact conditional and the
        ratio is zero, so the step degenerates to a plain Gibbs redraw.
        """
        z = self.z
        T = self.T
        n_sites = T + 2
        rng = self.rng

        t = 0
        while t < n_sites:
            if not member[t]:
                t += 1
                continue
            a = t
            while t < n_sites and member[t]:
                t += 1
            b = t - 1
            n = b - a + 1
            if n < self.MIN_BRIDGE_RUN:
                continue
            if a == 0 and b == n_sites - 1 and self.z0_prec == 0.0:
                # flat anchor with no fixed site anywhere: the run's
                # precision is singular (free translation), leave it to
                # the site pass
                continue

            sites = np.arange(a, b + 1)
            # site u couples to increments u-1 (left) and u (right); the
            # anchor has no left increment, the forecast site no right one
            diag = np.where(sites == 0, 0.0, k[np.maximum(sites - 1, 0)])
            diag += np.where(sites == n_sites - 1, 0.0,
                             k[np.minimum(sites, T)])
            if a == 0:
                diag[0] += self.z0_prec
            ab = np.zeros((2, n))
            ab[0, 1:] = -k[sites[:-1]]
            ab[1, :] = diag

            c = np.zeros(n)
            if a == 0:
                c[0] += self.z0_prec * self.z0_mean
            else:
                c[0] += k[a - 1] * z[a - 1]
            if b < n_sites - 1:
                c[-1] += k[b] * z[b + 1]

            chol = cholesky_banded(ab)
            mean = cho_solve_banded((chol, False), c)
            prop = mean + solve_banded((0, 1), chol,
                                       rng.standard_normal(n))

            which = exp_sites[a:b + 1]
            if which.any():
                with np.errstate(over="ignore"):
                    log_ratio = (float(np.exp(z[a:b + 1][which]).sum())
                                 - float(np.exp(prop[which]).sum()))
                self.att_bridge += 1
                u = rng.random()
                if not ((-math.inf if u == 0.0 else math.log(u))
                        < log_ratio):
                    continue
                self.acc_bridge += 1
            z[a:b + 1] = prop

    def _bridge_step(self, k: np.ndarray) -> None:
        """Two blocked passes over the quiet stretches of the path.

        Pass one redraws each long run of closed-gate sites exactly (their
        conditional is purely Gaussian).  Pass two proposes each long run
        of zero-count sites -- closed or open -- from the same Gaussian
        construction and corrects for the open members' Poisson zero terms
        by Metropolis; when the fitted intensity over such a stretch is
        small the acceptance is near one and the whole stretch jumps at
        once.  Positive counts pin their sites at the data scale, so those
        sites always act as fixed boundaries.  Without these moves the
        single-site pass relaxes long weakly-identified stretches only by
        diffusion, in O(length^2) sweeps.
        """
        T = self.T
        n_sites = T + 2
        member = np.empty(n_sites, dtype=bool)
        member[0] = True
        member[-1] = True
        exp_sites = np.zeros(n_sites, dtype=bool)

        member[1:T + 1] = self.s == 0
        self._bridge_pass(k, member, exp_sites)

        member[1:T + 1] = self.y <= 0.0
        exp_sites[1:T + 1] = (self.y <= 0.0) & (self.s == 1)
        self._bridge_pass(k, member, exp_sites)

    def sweep(self, gamma: float = 0.0) -> None:
        """One full transition: blocks (i) through (iv).

        ``gamma`` is the Robbins-Monro adaptation step; zero freezes every
        proposal scale, making the sweep a fixed Markov kernel.
        """
        self.iteration += 1
        it = self.iteration
        rng = self.rng
        n_sites = self.z.size

        try:
            k = precisions(self.innov)
        except ValueError as exc:
            raise NumericalError(
                f"innovation block failed at iteration {it}: {exc}") from exc
        normals = rng.standard_normal(n_sites)
        unifs = rng.random(n_sites)
        latent_sweep(self.z, k, self.y, self.s, self.log_scales,
                     self.acc_sites, self.att_sites, normals, unifs,
                     gamma, TARGET_ACCEPT, self.z0_prec, self.z0_mean)
        if not np.all(np.isfinite(self.z)):
            raise NumericalError(
                f"latent block produced non-finite path at iteration {it}")
        self._level_step(gamma)
        self._bridge_step(k)

        self.s = update_indicators(self.y, self.z[1:self.T + 1], self.pi, rng)
        self.pi = update_pi(self.s, rng, self.prior.pi_a, self.prior.pi_b)

        dz = np.diff(self.z)
        try:
            update_innovations(dz, self.innov, self.prior, rng, gamma)
        except (ValueError, FloatingPointError) as exc:
            raise NumericalError(
                f"innovation block failed at iteration {it}: {exc}") from exc


@dataclass
class DrawStore:
    """Posterior draws and bookkeeping from one chain.

    Scalar traces are kept at full resolution; latent paths are thinned.
    ``pi`` and ``z_next`` together determine every one-step predictive
    quantity, so forecasting never needs the full paths.
    """

    variant: str
    config: McmcConfig
    T: int
    pi: np.ndarray
    z_next: np.ndarray
    y_next_cond: np.ndarray
    y_next_uncond: np.ndarray
    s_prob: np.ndarray
    acceptance: dict
    runtime_s: float
    backend: str
    sigma2: np.ndarray | None = None
    nu: np.ndarray | None = None
    eta: np.ndarray | None = None
    comp_var: np.ndarray | None = None
    mu: np.ndarray | None = None
    phi: np.ndarray | None = None
    sigma_xi2: np.ndarray | None = None
    h_last: np.ndarray | None = None
    z_paths: np.ndarray | None = None
    h_paths: np.ndarray | None = None
    final_innovations: InnovationState | None = None

    @property
    def n_draws(self) -> int:
        return self.pi.size

    def scalar_traces(self) -> dict:
        """Full-resolution scalar traces keyed by parameter name."""
        out = {"pi": self.pi, "z_next": self.z_next}
        for name in ("sigma2", "nu", "mu", "phi", "sigma_xi2", "h_last"):
            trace = getattr(self, name)
            if trace is not None:
                out[name] = trace
        if self.eta is not None:
            for j in range(self.eta.shape[1]):
                out[f"eta_{j}"] = self.eta[:, j]
                out[f"comp_var_{j}"] = self.comp_var[:, j]
        return out


def run_chain(data: CountSeries, config: McmcConfig,
              prior: PriorConfig | None = None) -> DrawStore:
    """Run one Gibbs-Metropolis chain and return its draws."""
    prior = prior if prior is not None else PriorConfig()
    rng = np.random.default_rng(config.seed)
    chain = ChainState(data.counts, config, prior, rng)
    T = chain.T

    n_draws = config.n_draws
    thin = config.thin
    n_kept = (n_draws + thin - 1) // thin
    store = DrawStore(
        variant=config.variant, config=config, T=T,
        pi=np.empty(n_draws), z_next=np.empty(n_draws),
        y_next_cond=np.empty(n_draws, dtype=np.int64),
        y_next_uncond=np.empty(n_draws, dtype=np.int64),
        s_prob=np.zeros(T), acceptance={}, runtime_s=0.0, backend=BACKEND)
    if config.variant in ("gaussian", "student_t", "mixture"):
        store.sigma2 = np.empty(n_draws)
    if config.variant == "student_t":
        store.nu = np.empty(n_draws)
    if config.variant == "mixture":
        store.eta = np.empty((n_draws, config.n_components))
        store.comp_var = np.empty((n_draws, config.n_components))
    if config.variant == "sv":
        store.mu = np.empty(n_draws)
        store.phi = np.empty(n_draws)
        store.sigma_xi2 = np.empty(n_draws)
        store.h_last = np.empty(n_draws)
    if config.store_paths:
        store.z_paths = np.empty((n_kept, T + 2))
        if config.variant == "sv":
            store.h_paths = np.empty((n_kept, T + 1))

    t0 = time.perf_counter()
    total = config.n_burn + n_draws
    for it in range(1, total + 1):
        adapting = config.adapt and it <= config.n_burn
        gamma = min(ADAPT_CAP, it ** -0.5) if adapting else 0.0
        chain.sweep(gamma)
        if it <= config.n_burn:
            continue

        d = it - config.n_burn - 1
        innov = chain.innov
        store.pi[d] = chain.pi
        store.z_next[d] = chain.z[-1]
        store.s_prob += chain.s
        if store.sigma2 is not None:
            store.sigma2[d] = innov.sigma2
        if store.nu is not None:
            store.nu[d] = innov.nu
        if store.eta is not None:
            store.eta[d] = innov.eta
            store.comp_var[d] = innov.comp_var
        if store.mu is not None:
            store.mu[d] = innov.mu
            store.phi[d] = innov.phi
            store.sigma_xi2[d] = innov.sigma_xi2
            store.h_last[d] = innov.h[-1]

        # streamed one-step predictive: a coupled pair sharing the Poisson
        # draw, so the unconditional draw only differs by the closed gate
        with np.errstate(over="ignore"):
            lam_next = np.exp(chain.z[-1])
        y_draw = safe_poisson(chain.rng, lam_next)
        gate = chain.rng.random()
        store.y_next_cond[d] = y_draw
        store.y_next_uncond[d] = y_draw if gate < chain.pi else 0

        if config.store_paths and d % thin == 0:
            store.z_paths[d // thin] = chain.z
            if store.h_paths is not None:
                store.h_paths[d // thin] = innov.h

    store.runtime_s = time.perf_counter() - t0
    store.s_prob /= n_draws
    store.final_innovations = chain.innov

    n_mh = int(chain.att_sites.sum())
    store.acceptance["latent"] = (
        float(chain.acc_sites.sum()) / n_mh if n_mh else float("nan"))
    store.acceptance["level"] = (
        chain.acc_level / chain.att_level if chain.att_level
        else float("nan"))
    store.acceptance["bridge"] = (
        chain.acc_bridge / chain.att_bridge if chain.att_bridge
        else float("nan"))
    if config.variant == "student_t":
        innov = chain.innov
        store.acceptance["nu"] = (
            innov.nu_accepts / innov.nu_attempts if innov.nu_attempts
            else float("nan"))
    if config.variant == "sv":
        innov = chain.innov
        store.acceptance["phi"] = (
            innov.phi_accepts / innov.phi_attempts if innov.phi_attempts
            else float("nan"))
    return store


def ess_geyer(trace: np.ndarray) -> float:
    """Effective sample size via the initial monotone sequence estimator.

    Pairs of consecutive autocorrelations are summed, truncated at the first
    non-positive pair, forced non-increasing, and folded into the usual
    integrated autocorrelation time.  A constant trace reports 2 rather than
    a spurious large value.
    """
    x = np.asarray(trace, dtype=np.float64)
    n = x.size
    if n < 4:
        return float(min(n, 2))
    x = x - x.mean()
    var0 = float(x @ x) / n
    if not np.isfinite(var0) or var0 <= 0.0:
        return 2.0
    nfft = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(x, nfft)
    acov = np.fft.irfft(f * np.conj(f), nfft)[:n] / n
    rho = acov / acov[0]
    m_max = n // 2
    pair = rho[0:2 * m_max:2] + rho[1:2 * m_max:2]
    nonpos = np.nonzero(pair <= 0.0)[0]
    if nonpos.size:
        pair = pair[:nonpos[0]]
    if pair.size == 0:
        return float(n)
    pair = np.minimum.accumulate(pair)
    tau = max(-1.0 + 2.0 * float(pair.sum()), 1e-12)
    return float(n / tau)


def diagnostics(store: DrawStore) -> dict:
    """Per-parameter effective sample sizes plus acceptance rates."""
    ess = {name: ess_geyer(trace)
           for name, trace in store.scalar_traces().items()}
    return {
        "ess": ess,
        "acceptance": dict(store.acceptance),
        "runtime_s": store.runtime_s,
        "backend": store.backend,
        "n_draws": store.n_draws,
    }
