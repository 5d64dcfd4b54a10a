"""Build script for the optional compiled trial kernel.

The package works without the extension (a pure-Python codec is selected at
import time); building it speeds up Monte-Carlo runs by more than an order of
magnitude.  Floating-point contraction is disabled so the compiled kernel
produces bit-identical transcripts to the pure-Python path.
"""

from setuptools import setup, Extension

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "spmtop._kernel",
                ["src/spmtop/_kernel.pyx"],
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        language_level=3,
    )
else:
    ext_modules = []

setup(ext_modules=ext_modules)
