"""Build script: compiles the optional Cython sampling kernel.

The package is fully functional without the extension (a numpy fallback is
selected at import time), so any failure here downgrades to a pure-Python
build instead of aborting the install.
"""

import sys

from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "irem._kernels._native",
                ["src/irem/_kernels/_native.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - build-environment dependent
    sys.stderr.write(f"warning: building without native kernels ({exc})\n")

setup(ext_modules=ext_modules)
