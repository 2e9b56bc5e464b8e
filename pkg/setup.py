"""Build script for the optional compiled kernel module.

The package is fully functional without the extension (a numpy fallback is
selected at import time), so the build is marked optional: a missing C
compiler degrades performance, not correctness.
"""

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                name="branchrange._kernels.cyimpl",
                sources=["src/branchrange/_kernels/cyimpl.pyx"],
                include_dirs=[numpy.get_include()],
                # -ffp-contract=off keeps float results bit-identical to the
                # numpy fallback (no fused multiply-add reassociation).
                extra_compile_args=["-O3", "-ffp-contract=off"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                optional=True,
            )
        ],
        compiler_directives={"language_level": 3},
    )

setup(ext_modules=ext_modules)
