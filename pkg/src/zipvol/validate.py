"""Sampler correctness harnesses.

Two complementary checks that the Markov chain targets exactly the joint
distribution the generative code simulates from:

* `joint_distribution_test` (the getting-it-right test): compare moments of
  test functions under two simulators of the same joint p(theta, y).  The
  marginal-conditional simulator draws parameters from the prior and data
  given parameters, independently per replicate.  The successive-conditional
  simulator alternates one full sampler sweep with a fresh data draw given
  the current parameters.  Any disagreement beyond Monte Carlo error
  indicates a transition-kernel bug.

* `simulation_based_calibration`: for replicated prior draws, the rank of
  the generating value among thinned posterior draws must be uniform.

Both harnesses tighten several prior hyperparameters (`harness_prior`): with
the default analysis priors the prior-predictive distribution puts mass on
astronomically large counts, which is harmless for fitting real data but
useless for simulation checks.  The override is applied identically to both
simulators, so the check itself stays exact.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import chisquare

from .backtest import cell_seed
from .engine import ADAPT_CAP, ChainState, McmcConfig
from .innovations import VARIANTS
from .priors import PriorConfig
from .simulate import draw_increments, simulate_counts


def harness_prior() -> PriorConfig:
    """Tame prior overrides shared by both simulators of each harness.

    Besides keeping prior-predictive counts representable, the volatility
    hyperparameters keep E[exp(h)] finite in practice: the AR(1) stationary
    variance sigma_xi2 / (1 - phi^2) must stay clear of the gamma prior's
    moment-generating-function pole, which these choices push beyond the
    effective support of phi.
    """
    return PriorConfig(z0_mean=1.0, z0_var=0.5,
                       ig_shape=3.0, ig_rate=0.6,
                       mu_mean=-1.5, mu_var=0.5,
                       phi_a=5.0, phi_b=3.0,
                       sigma_xi_shape=3.0, sigma_xi_rate=15.0)


@dataclass(frozen=True)
class JointDraw:
    """One draw from the joint prior-predictive distribution."""

    pi: float
    params: dict
    latents: dict
    z: np.ndarray
    s: np.ndarray
    y: np.ndarray


def draw_innovation_params(variant: str, rng: np.random.Generator,
                           prior: PriorConfig, n_components: int = 2) -> dict:
    """One draw of the innovation family's parameters from the prior."""
    if variant == "gaussian":
        return {"sigma2": prior.ig_rate / rng.standard_gamma(prior.ig_shape)}
    if variant == "student_t":
        return {"sigma2": prior.ig_rate / rng.standard_gamma(prior.ig_shape),
                "nu": prior.nu_shift + rng.exponential(1.0 / prior.nu_rate)}
    if variant == "mixture":
        return {"eta": rng.dirichlet(np.full(n_components,
                                             prior.dirichlet_conc)),
                "comp_var": prior.ig_rate / rng.standard_gamma(
                    prior.ig_shape, n_components),
                "sigma2": prior.ig_rate / rng.standard_gamma(prior.ig_shape)}
    if variant == "sv":
        return {"mu": rng.normal(prior.mu_mean, math.sqrt(prior.mu_var)),
                "phi": 2.0 * rng.beta(prior.phi_a, prior.phi_b) - 1.0,
                "sigma_xi2": rng.gamma(prior.sigma_xi_shape,
                                       1.0 / prior.sigma_xi_rate)}
    raise ValueError(
        f"unknown innovation variant {variant!r}; "
        f"expected one of {', '.join(VARIANTS)}")


def draw_joint(variant: str, T: int, rng: np.random.Generator,
               prior: PriorConfig, n_components: int = 2) -> JointDraw:
    """Parameters from the prior, then a series of length T given them."""
    if prior.z0_mean is None:
        raise ValueError("harness priors must fix z0_mean explicitly")
    pi = float(rng.beta(prior.pi_a, prior.pi_b))
    z0 = rng.normal(prior.z0_mean, math.sqrt(prior.z0_var))
    params = draw_innovation_params(variant, rng, prior, n_components)
    dz, latents = draw_increments(variant, T + 1, rng, params)
    z = np.empty(T + 2)
    z[0] = z0
    z[1:] = z0 + np.cumsum(dz)
    s = (rng.random(T) < pi).astype(np.int8)
    y = simulate_counts(z[1:T + 1], s, rng)
    return JointDraw(pi=pi, params=params, latents=latents, z=z, s=s, y=y)


def _install_joint_draw(chain: ChainState, draw: JointDraw) -> None:
    """Overwrite the chain's state with an exact joint draw."""
    chain.y[:] = draw.y
    chain.z[:] = draw.z
    chain.s = draw.s.copy()
    chain.pi = draw.pi
    innov = chain.innov
    variant = innov.variant
    if variant in ("gaussian", "student_t", "mixture"):
        innov.sigma2 = float(draw.params["sigma2"])
    if variant == "student_t":
        innov.nu = float(draw.params["nu"])
        innov.omega = draw.latents["omega"].copy()
    elif variant == "mixture":
        innov.eta = np.asarray(draw.params["eta"], dtype=np.float64).copy()
        innov.comp_var = np.asarray(draw.params["comp_var"],
                                    dtype=np.float64).copy()
        innov.rho = draw.latents["rho"].copy()
    elif variant == "sv":
        innov.mu = float(draw.params["mu"])
        innov.phi = float(draw.params["phi"])
        innov.sigma_xi2 = float(draw.params["sigma_xi2"])
        innov.h = draw.latents["h"].copy()


def _scale_value(variant: str, params_or_state) -> float:
    """The scale test function: sigma2, or exp(mu) for sv."""
    if variant == "sv":
        mu = (params_or_state["mu"] if isinstance(params_or_state, dict)
              else params_or_state.mu)
        return math.exp(mu)
    return float(params_or_state["sigma2"]
                 if isinstance(params_or_state, dict)
                 else params_or_state.sigma2)


_TEST_FUNCTIONS = ("pi", "scale", "z_mid", "log1p_y")


@dataclass
class GewekeReport:
    """Comparison of test-function moments between the two simulators."""

    variant: str
    n_samples: int
    n_chains: int
    rows: dict

    @property
    def max_abs_z(self) -> float:
        return max(abs(r["z"]) for r in self.rows.values())

    def passed(self, threshold: float = 4.0) -> bool:
        return self.max_abs_z <= threshold

    def __str__(self):
        lines = [f"{self.variant}: joint distribution test, "
                 f"{self.n_samples} samples per simulator "
                 f"({self.n_chains} chains)"]
        for name, r in self.rows.items():
            lines.append(
                f"  {name:7s} prior={r['mean_prior']:+.4f} "
                f"chain={r['mean_chain']:+.4f} z={r['z']:+.2f}")
        return "\n".join(lines)


def _record_state(chain: ChainState, mid: int) -> tuple:
    return (chain.pi,
            _scale_value(chain.innov.variant, chain.innov),
            chain.z[mid],
            math.log1p(chain.y[mid - 1]))


def _frozen_scales(variant, T, seed, prior, warmup, n_components):
    """Adapt proposal scales on a throwaway successive chain, then freeze."""
    rng = np.random.default_rng(seed)
    draw = draw_joint(variant, T, rng, prior, n_components)
    config = McmcConfig(variant=variant, n_burn=0, n_draws=1,
                        seed=0, n_components=n_components)
    chain = ChainState(draw.y.astype(np.float64), config, prior, rng)
    _install_joint_draw(chain, draw)
    for i in range(1, warmup + 1):
        chain.sweep(min(ADAPT_CAP, i ** -0.5))
        chain.y[:] = simulate_counts(chain.z[1:T + 1], chain.s, rng)
    return (chain.log_scales.copy(), chain.level_log_scale,
            chain.innov.nu_log_scale, chain.innov.phi_log_scale)


def _successive_chain(args):
    """One fixed-kernel chain from an exact joint draw; returns fn means.

    Because the start is an exact draw from the joint and the kernel is
    frozen, the chain is stationary from the first sweep; no burn-in is
    needed and chain means are independent across chains.
    """
    (variant, T, n_records, seed, prior, n_components,
     log_scales, level_ls, nu_ls, phi_ls) = args
    rng = np.random.default_rng(seed)
    draw = draw_joint(variant, T, rng, prior, n_components)
    config = McmcConfig(variant=variant, n_burn=0, n_draws=1,
                        seed=0, n_components=n_components)
    chain = ChainState(draw.y.astype(np.float64), config, prior, rng)
    _install_joint_draw(chain, draw)
    chain.log_scales[:] = log_scales
    chain.level_log_scale = level_ls
    chain.innov.nu_log_scale = nu_ls
    chain.innov.phi_log_scale = phi_ls
    mid = T // 2
    sums = np.zeros(len(_TEST_FUNCTIONS))
    for _ in range(n_records):
        chain.sweep(0.0)
        chain.y[:] = simulate_counts(chain.z[1:T + 1], chain.s, rng)
        sums += _record_state(chain, mid)
    return sums / n_records


def _marginal_chunk(args):
    (variant, T, n, seed, prior, n_components) = args
    rng = np.random.default_rng(seed)
    mid = T // 2
    out = np.empty((n, len(_TEST_FUNCTIONS)))
    for r in range(n):
        draw = draw_joint(variant, T, rng, prior, n_components)
        out[r] = (draw.pi, _scale_value(variant, draw.params),
                  draw.z[mid], math.log1p(draw.y[mid - 1]))
    return out.sum(axis=0), (out * out).sum(axis=0)


def joint_distribution_test(variant: str, T: int = 20,
                            n_samples: int = 200000, seed: int = 0,
                            prior: PriorConfig | None = None,
                            warmup: int = 3000, n_chains: int = 20,
                            n_components: int = 2,
                            n_jobs: int | None = None) -> GewekeReport:
    """Getting-it-right check for one innovation family.

    Test functions: pi, the family scale (sigma2 or exp(mu)), the mid-series
    log-intensity, and log1p of the mid-series count.  The count enters
    through log1p because its raw prior-predictive mean does not exist (the
    inverse-gamma scale tail makes E[exp(z)] diverge), which would void a
    mean-comparison test.

    The successive-conditional samples come from `n_chains` independent
    chains sharing one frozen proposal-scale set; each starts at an exact
    joint draw, so it is stationary from the first sweep.  The Monte Carlo
    error of that simulator is the between-chain standard error, which needs
    no autocorrelation estimate and stays honest however slowly the joint
    chain mixes.
    """
    if T < 11:
        raise ValueError("need at least 11 weeks for the mid-series site")
    if n_chains < 8:
        raise ValueError("need at least 8 chains for a stable error bar")
    prior = prior if prior is not None else harness_prior()
    names = _TEST_FUNCTIONS

    scales = _frozen_scales(variant, T,
                            cell_seed(seed, "joint-adapt", variant, 0),
                            prior, warmup, n_components)
    per_chain = n_samples // n_chains
    chain_jobs = [
        (variant, T, per_chain,
         cell_seed(seed, "joint-sc", variant, c),
         prior, n_components, *scales)
        for c in range(n_chains)]
    n_marg_chunks = max(n_chains // 2, 1)
    chunk = n_samples // n_marg_chunks
    marg_jobs = [
        (variant, T,
         chunk + (n_samples - n_marg_chunks * chunk if c == 0 else 0),
         cell_seed(seed, "joint-mc", variant, c), prior, n_components)
        for c in range(n_marg_chunks)]

    if n_jobs == 1:
        chain_means = [_successive_chain(j) for j in chain_jobs]
        marg_parts = [_marginal_chunk(j) for j in marg_jobs]
    else:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            chain_futs = [pool.submit(_successive_chain, j)
                          for j in chain_jobs]
            marg_futs = [pool.submit(_marginal_chunk, j) for j in marg_jobs]
            chain_means = [f.result() for f in chain_futs]
            marg_parts = [f.result() for f in marg_futs]

    chain_means = np.asarray(chain_means)
    marg_n = sum(j[2] for j in marg_jobs)
    marg_sum = np.sum([p[0] for p in marg_parts], axis=0)
    marg_sumsq = np.sum([p[1] for p in marg_parts], axis=0)
    marg_mean = marg_sum / marg_n
    marg_var = (marg_sumsq - marg_n * marg_mean ** 2) / (marg_n - 1)

    rows = {}
    for j, name in enumerate(names):
        mean_sc = float(chain_means[:, j].mean())
        se_sc = float(chain_means[:, j].std(ddof=1) / math.sqrt(n_chains))
        se = math.sqrt(marg_var[j] / marg_n + se_sc ** 2)
        rows[name] = {
            "mean_prior": float(marg_mean[j]),
            "mean_chain": mean_sc,
            "se": se,
            "z": float((marg_mean[j] - mean_sc) / se) if se > 0 else 0.0,
        }
    return GewekeReport(variant=variant, n_samples=per_chain * n_chains,
                        n_chains=n_chains, rows=rows)


@dataclass
class SbcReport:
    """Posterior ranks of generating values across replications."""

    variant: str
    n_reps: int
    n_posterior: int
    ranks: dict

    def p_values(self, bins: int = 20) -> dict:
        # ranks take n_posterior + 1 values; when bins does not divide that
        # evenly the bins hold unequal numbers of rank values, so the
        # expected counts must be weighted accordingly
        n_vals = self.n_posterior + 1
        bins = min(bins, n_vals)
        per_bin = np.bincount(np.arange(n_vals) * bins // n_vals,
                              minlength=bins)
        out = {}
        for name, ranks in self.ranks.items():
            binned = np.bincount(ranks * bins // n_vals, minlength=bins)
            expected = per_bin * (len(ranks) / n_vals)
            out[name] = float(chisquare(binned, expected).pvalue)
        return out

    def passed(self, alpha: float = 0.01, bins: int = 20) -> bool:
        return all(p > alpha for p in self.p_values(bins).values())

    def __str__(self):
        pv = self.p_values()
        body = ", ".join(f"{k}: p={v:.3f}" for k, v in pv.items())
        return (f"{self.variant}: rank calibration over {self.n_reps} "
                f"replications; {body}")


def _sbc_replicate(args):
    """One replication: prior draw, chain started at it, thinned ranks.

    The chain starts at the generating joint draw, which conditional on the
    simulated data is an exact posterior draw, so the chain is stationary
    from the first sweep; the burn-in phase is spent adapting proposal
    scales and decorrelating the kept draws from the generating value.
    Starting cold instead would bias the ranks for the replications whose
    posterior the sampler traverses slowly.
    """
    (variant, T, seed, chain_seed, n_burn, n_draws, thin,
     prior, n_components) = args
    rng = np.random.default_rng(seed)
    draw = draw_joint(variant, T, rng, prior, n_components)
    config = McmcConfig(variant=variant, n_burn=n_burn, n_draws=n_draws,
                        thin=thin, seed=chain_seed, store_paths=False,
                        n_components=n_components)
    chain = ChainState(draw.y.astype(np.float64), config, prior,
                       np.random.default_rng(chain_seed))
    _install_joint_draw(chain, draw)
    mid = T // 2
    n_kept = n_draws // thin
    pi_draws = np.empty(n_kept)
    scale_draws = np.empty(n_kept)
    z_mid_draws = np.empty(n_kept)
    k = 0
    for it in range(1, n_burn + n_draws + 1):
        adapting = config.adapt and it <= n_burn
        chain.sweep(min(ADAPT_CAP, it ** -0.5) if adapting else 0.0)
        if it > n_burn and (it - n_burn) % thin == 0:
            pi_draws[k] = chain.pi
            scale_draws[k] = _scale_value(variant, chain.innov)
            z_mid_draws[k] = chain.z[mid]
            k += 1
    return {
        "pi": int(np.sum(pi_draws < draw.pi)),
        "z_mid": int(np.sum(z_mid_draws < draw.z[mid])),
        "scale": int(np.sum(scale_draws
                            < _scale_value(variant, draw.params))),
    }


def simulation_based_calibration(variant: str, T: int = 50,
                                 n_reps: int = 200, n_burn: int = 1000,
                                 n_draws: int = 5000, thin: int = 100,
                                 seed: int = 0,
                                 prior: PriorConfig | None = None,
                                 n_jobs: int | None = None,
                                 n_components: int = 2) -> SbcReport:
    """Rank-uniformity check: fit n_reps prior-predictive replications.

    Ranks are taken among the thinned draws, so each parameter has
    n_draws / thin + 1 possible ranks.  Rank uniformity holds only for
    near-independent draws: thin must exceed the sampler's integrated
    autocorrelation time for the slowest test function, which for the
    volatility variant on weakly informative replications reaches tens of
    sweeps (hence the conservative default).  Each chain starts at the
    generating joint draw -- an exact posterior draw -- so convergence
    speed from an arbitrary initialization never enters.
    """
    prior = prior if prior is not None else harness_prior()
    jobs = []
    for rep in range(n_reps):
        jobs.append((variant, T,
                     cell_seed(seed, "sbc-data", variant, rep),
                     cell_seed(seed, "sbc-chain", variant, rep) % (2 ** 63),
                     n_burn, n_draws, thin, prior, n_components))
    if n_jobs == 1:
        results = [_sbc_replicate(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(_sbc_replicate, jobs, chunksize=2))
    names = results[0].keys()
    ranks = {name: np.array([r[name] for r in results]) for name in names}
    return SbcReport(variant=variant, n_reps=n_reps,
                     n_posterior=n_draws // thin, ranks=ranks)
