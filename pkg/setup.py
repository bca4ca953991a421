"""Build script: compiles the optional tree-kernel extension.

The package works without the extension (a numpy fallback is selected at
import time), so any failure here downgrades to a pure-Python install
instead of aborting.
"""
import warnings

from setuptools import setup

ext_modules = []
try:
    import numpy
    from setuptools.extension import Extension
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "ionprof._kernels._core",
                ["src/ionprof/_kernels/_core.pyx"],
                language="c++",
                include_dirs=[numpy.get_include()],
                # no fast-math / fp-contraction: the fallback backend must
                # reproduce results bit-for-bit
                extra_compile_args=["-O3", "-ffp-contract=off"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError as exc:
    warnings.warn(f"Cython/numpy unavailable ({exc}); building without compiled kernels")

setup(ext_modules=ext_modules)
