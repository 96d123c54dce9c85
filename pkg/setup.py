"""Build script for the optional compiled kernels.

The package works without the extension (a NumPy fallback is selected at
import time); the Cython core just makes trajectory integration and the
Lyapunov QR loop much faster.
"""

import warnings

from setuptools import setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the extension if possible, otherwise install pure-Python."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # pragma: no cover - build-env dependent
            warnings.warn(f"compiled kernels skipped: {exc}")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # pragma: no cover - build-env dependent
            warnings.warn(f"compiled kernels skipped: {exc}")


def extensions():
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except Exception:  # pragma: no cover - build-env dependent
        return []
    ext = Extension(
        "dynspike.backends._ckernels",
        ["src/dynspike/backends/_ckernels.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
