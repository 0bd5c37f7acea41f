#!/usr/bin/env python3
"""Time the latent-path sweep: compiled kernel vs pure-Python reference.

The sweep is the hot loop of every chain (one Metropolis-or-Gibbs visit
to each of the T+2 latent sites), so the ratio reported here is close to
the end-to-end speedup of a full run.  Both backends consume identical
pre-generated random streams and produce bit-identical paths; the check
at the end asserts that on the benchmark inputs.

Usage: python bench/benchmark_sweep.py [--T 500] [--sweeps 2000]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from zipvol._kernels import HAVE_COMPILED, py_latent_sweep
from zipvol.latent import TARGET_ACCEPT


def make_problem(T: int, seed: int):
    rng = np.random.default_rng(seed)
    z = np.cumsum(rng.normal(0.0, 0.2, T + 2)) + 3.0
    k = np.full(T + 1, 25.0)  # precisions of the T+1 increments
    s = (rng.random(T) < 0.9).astype(np.int8)
    y = np.where(s == 1, rng.poisson(np.exp(z[1:-1])), 0).astype(np.float64)
    log_scales = np.full(T + 2, np.log(0.1))
    return z, k, y, s, log_scales


def run(kernel, T: int, n_sweeps: int, seed: int):
    z, k, y, s, log_scales = make_problem(T, seed)
    z = z.copy()
    log_scales = log_scales.copy()
    accepts = np.zeros(T + 2, dtype=np.int64)
    attempts = np.zeros(T + 2, dtype=np.int64)
    rng = np.random.default_rng(seed + 1)
    normals = rng.standard_normal((n_sweeps, T + 2))
    unifs = rng.random((n_sweeps, T + 2))
    t0 = time.perf_counter()
    for i in range(n_sweeps):
        kernel(z, k, y, s, log_scales, accepts, attempts,
               normals[i], unifs[i], 0.01, TARGET_ACCEPT, 1e-4, 3.0)
    elapsed = time.perf_counter() - t0
    return elapsed, z, log_scales, accepts


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--T", type=int, default=500, help="series length")
    parser.add_argument("--sweeps", type=int, default=2000)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    t_py, z_py, ls_py, acc_py = run(py_latent_sweep, args.T, args.sweeps, args.seed)
    rate = args.sweeps * (args.T + 2) / t_py
    print(f"pure python : {t_py:8.3f}s  ({rate:12.0f} site-updates/s)")

    if not HAVE_COMPILED:
        print("compiled kernel not available in this build; nothing to compare")
        return 0

    from zipvol._kernels._core import latent_sweep as c_latent_sweep

    t_c, z_c, ls_c, acc_c = run(c_latent_sweep, args.T, args.sweeps, args.seed)
    rate = args.sweeps * (args.T + 2) / t_c
    print(f"compiled    : {t_c:8.3f}s  ({rate:12.0f} site-updates/s)")
    print(f"speedup     : {t_py / t_c:8.1f}x")

    same = (np.array_equal(z_py, z_c) and np.array_equal(ls_py, ls_c)
            and np.array_equal(acc_py, acc_c))
    print(f"bit-identical paths, scales, and counters: {same}")
    return 0 if same else 1


if __name__ == "__main__":
    raise SystemExit(main())
