"""Build script: compiles the min-cost-flow kernel when Cython is available.

The package works without the extension (a pure-Python twin is selected at
import time), so a failed extension build should not block installation.
Set RESTORO_NO_EXT=1 to skip the compiled kernel entirely.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("RESTORO_NO_EXT"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "restoro._kernel._mincost",
                    ["src/restoro/_kernel/_mincost.pyx"],
                )
            ],
            language_level="3",
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
