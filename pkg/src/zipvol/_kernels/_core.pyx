# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled single-site Gibbs/Metropolis sweep over the latent log-intensity path.

Mirrors ``zipvol._kernels._ref.latent_sweep`` exactly, operation for
operation, so that both backends produce bit-identical chains from the same
pre-generated random numbers.
"""

from libc.math cimport exp, log, sqrt


def latent_sweep(double[::1] z, double[::1] k, double[::1] y,
                 signed char[::1] s, double[::1] log_scales,
                 long long[::1] accepts, long long[::1] attempts,
                 double[::1] normals, double[::1] unifs,
                 double adapt_step, double target_rate,
                 double z0_prec, double z0_mean):
    """One full ascending sweep over sites 0..T+1 of the latent path.

    Sites with an inactive gate (and both endpoints) get exact Gaussian
    conditional draws; active sites get a random-walk Metropolis step against
    the Gaussian-times-Poisson target.  ``normals`` and ``unifs`` must hold
    one variate per site; ``z``, ``log_scales``, ``accepts`` and ``attempts``
    are updated in place.  Returns ``(n_mh, n_accepted)`` for this sweep.
    """
    cdef Py_ssize_t n_sites = z.shape[0]
    cdef Py_ssize_t t
    cdef double prec, m, cur, prop, dq, logr, acc
    cdef long long n_mh = 0
    cdef long long n_acc = 0

    for t in range(n_sites):
        if t == 0:
            prec = k[0] + z0_prec
            m = (k[0] * z[1] + z0_prec * z0_mean) / prec
        elif t == n_sites - 1:
            prec = k[t - 1]
            m = z[t - 1]
        else:
            prec = k[t - 1] + k[t]
            m = (k[t - 1] * z[t - 1] + k[t] * z[t + 1]) / prec

        if t == 0 or t == n_sites - 1 or s[t - 1] == 0:
            # Gaussian conditional: draw exactly, no MH needed.
            z[t] = m + normals[t] / sqrt(prec)
        else:
            cur = z[t]
            prop = cur + exp(log_scales[t]) * normals[t]
            dq = 0.5 * ((cur - m) * (cur - m) - (prop - m) * (prop - m)) * prec
            logr = dq + y[t - 1] * (prop - cur) - (exp(prop) - exp(cur))
            attempts[t] += 1
            n_mh += 1
            acc = 0.0
            if log(unifs[t]) < logr:
                z[t] = prop
                accepts[t] += 1
                acc = 1.0
                n_acc += 1
            if adapt_step > 0.0:
                log_scales[t] += adapt_step * (acc - target_rate)

    return n_mh, n_acc
