"""Build script: compiles the replay kernel extension when Cython is available.

The package works without the extension (catsim.kernels falls back to the
pure-Python replay path), so a missing compiler only costs speed.
"""

import os

from setuptools import setup

try:
    from Cython.Build import cythonize

    sources = [p for p in ["src/catsim/_kernels.pyx"] if os.path.exists(p)]
    ext_modules = cythonize(
        sources,
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "initializedcheck": False,
            "cdivision": True,
        },
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
