"""Backend selection for the hot sweep kernel.

The compiled Cython kernel is preferred; the pure-Python reference is used
when the extension is unavailable or when ``ZIPVOL_PURE_PYTHON=1`` is set.
Both produce bit-identical chains, so the choice only affects speed.
"""

import os

from zipvol._kernels import _ref

py_latent_sweep = _ref.latent_sweep

if os.environ.get("ZIPVOL_PURE_PYTHON", "") not in ("", "0"):
    HAVE_COMPILED = False
    latent_sweep = _ref.latent_sweep
    BACKEND = "python"
else:
    try:
        from zipvol._kernels._core import latent_sweep as _c_latent_sweep
    except ImportError:
        HAVE_COMPILED = False
        latent_sweep = _ref.latent_sweep
        BACKEND = "python"
    else:
        HAVE_COMPILED = True
        latent_sweep = _c_latent_sweep
        BACKEND = "compiled"

__all__ = ["latent_sweep", "py_latent_sweep", "HAVE_COMPILED", "BACKEND"]
