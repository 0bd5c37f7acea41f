"""Builds the optional compiled sweep kernel.

The extension is marked optional: if no C compiler (or Cython) is available
the install still succeeds and the package falls back to the pure-Python
sweep at import time.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "zipvol._kernels._core",
                ["src/zipvol/_kernels/_core.pyx"],
                optional=True,
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
