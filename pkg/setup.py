import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if os.environ.get("SKEWFRONT_NO_EXT") != "1":
    from Cython.Build import cythonize

    extensions = [
        Extension(
            "skewfront._core",
            ["src/skewfront/_core.pyx"],
            include_dirs=[np.get_include()],
            extra_compile_args=["-O3"],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        )
    ]
    ext_modules = cythonize(
        extensions,
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )

setup(ext_modules=ext_modules)
