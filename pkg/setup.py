"""Build script: compiles the SPD kernel extension when Cython is available.

The package works without the extension (a numpy fallback is selected at
import time), so any build failure here should not block installation:
run ``MFNET_SKIP_EXT=1 pip install .`` to skip compilation entirely.
"""

import os

from setuptools import setup


def extensions():
    if os.environ.get("MFNET_SKIP_EXT"):
        return []
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools.extension import Extension
    except ImportError:
        return []
    ext = Extension(
        "mfnet.kernels._spdcore",
        ["src/mfnet/kernels/_spdcore.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=extensions())
