"""Build script: compiles the simplex kernel extension unless LIMBPLAN_NO_EXT is set.

The package works without the extension (pure-numpy fallback is selected at
import time); the compiled kernel is what makes the workspace sweeps and
branch-and-bound node LPs fast.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("LIMBPLAN_NO_EXT"):
    import numpy as np
    from Cython.Build import cythonize

    ext = Extension(
        "limbplan._simplex",
        ["src/limbplan/_simplex.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
    ext_modules = cythonize([ext], language_level=3)

setup(ext_modules=ext_modules)
