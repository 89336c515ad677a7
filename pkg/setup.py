"""Build script for the optional compiled interval kernels.

The package is pure Python plus one optional Cython extension
(``automm._kernels._fast``).  If Cython or a C compiler is missing, the
build silently falls back to the NumPy kernels selected at import time.
"""

from setuptools import setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Build the extension if possible, otherwise keep the pure build."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing or broken toolchain
            print(f"skipping compiled kernels ({exc}); using NumPy fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"skipping {ext.name} ({exc}); using NumPy fallback")


def extensions():
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools.extension import Extension
    except ImportError:
        return []
    # No -ffast-math: the kernels rely on IEEE inf/nan semantics and
    # nextafter-based outward rounding.
    return cythonize(
        [
            Extension(
                "automm._kernels._fast",
                ["src/automm/_kernels/_fast.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )


setup(ext_modules=extensions(), cmdclass={"build_ext": optional_build_ext})
