"""Pure-Python reference implementation of the latent sweep.

Kept arithmetically identical to the Cython kernel in ``_core.pyx``: same
expressions, same evaluation order, plain C doubles throughout.  ``math.exp``
and ``math.log`` raise where C quietly returns ``inf``/``-inf``, so the two
local wrappers restore C semantics.
"""

import math


def _exp(x):
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def _log(x):
    if x == 0.0:
        return -math.inf
    return math.log(x)


def latent_sweep(z, k, y, s, log_scales, accepts, attempts, normals, unifs,
                 adapt_step, target_rate, z0_prec, z0_mean):
    """One full ascending sweep over sites 0..T+1 of the latent path.

    Same contract as the compiled kernel; see ``_core.pyx``.
    """
    n_sites = z.shape[0]
    n_mh = 0
    n_acc = 0

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
            z[t] = m + normals[t] / math.sqrt(prec)
        else:
            cur = z[t]
            prop = cur + _exp(log_scales[t]) * normals[t]
            dq = 0.5 * ((cur - m) * (cur - m) - (prop - m) * (prop - m)) * prec
            logr = dq + y[t - 1] * (prop - cur) - (_exp(prop) - _exp(cur))
            attempts[t] += 1
            n_mh += 1
            acc = 0.0
            if _log(unifs[t]) < logr:
                z[t] = prop
                accepts[t] += 1
                acc = 1.0
                n_acc += 1
            if adapt_step > 0.0:
                log_scales[t] += adapt_step * (acc - target_rate)

    return n_mh, n_acc
