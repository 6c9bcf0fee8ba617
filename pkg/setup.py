"""Build script for the optional Cython kernel.

The extension is optional: if Cython or a compiler is missing the package
still installs and ``qcert.numeric_kernel`` falls back to ``_pykernel``.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("QCERT_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "qcert._ckernel",
                    ["src/qcert/_ckernel.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
