"""Build script for the optional compiled kernels.

The package works without the extension: if Cython or a C compiler is
unavailable the build falls back to the pure-Python kernels in
``impulsedde._kernels.reference``.
"""
import os

import numpy
from setuptools import setup, Extension

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

PYX = "src/impulsedde/_kernels/_speedups.pyx"

ext_modules = []
if cythonize is not None and os.path.exists(PYX):
    ext_modules = cythonize(
        [
            Extension(
                "impulsedde._kernels._speedups",
                [PYX],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
