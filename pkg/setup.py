"""Build script for the compiled kernel extension.

The package works without the extension (a numpy fallback is selected at
import time), so compilation failures are tolerated: we retry without the
extension rather than failing the whole install.
"""

import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "bregman_pnp._kernels._core",
        sources=["src/bregman_pnp/_kernels/_core.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
]

setup(
    ext_modules=cythonize(extensions, language_level=3),
)
