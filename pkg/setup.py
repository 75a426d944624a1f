"""Build hook for the optional compiled kernel extension.

The package is fully functional without the extension (a pure-Python
twin is selected at import time); building it just makes the hot series
kernels much faster. Set KMUSEC_PURE_PYTHON=1 to skip compilation.
"""
import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("KMUSEC_PURE_PYTHON") and os.path.exists("src/kmusec/_ckernels.pyx"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "kmusec._ckernels",
                    ["src/kmusec/_ckernels.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level=3,
        )

setup(ext_modules=ext_modules)
