"""Build script: compiles the fast rollout kernel when a C toolchain is available.

The package works without the extension (a pure-Python kernel is selected at
import time), so a failed extension build downgrades to a warning instead of
aborting the install.
"""

import warnings

from setuptools import setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # pragma: no cover - toolchain-dependent
            warnings.warn(f"compiled kernel skipped ({exc}); pure-Python backend will be used")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # pragma: no cover - toolchain-dependent
            warnings.warn(f"compiled kernel skipped ({exc}); pure-Python backend will be used")


def extensions():
    try:
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:  # pragma: no cover - build environment without Cython
        return []
    return cythonize(
        [
            Extension(
                "platebank._kernel_cy",
                ["src/platebank/_kernel_cy.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )


setup(
    ext_modules=extensions(),
    cmdclass={"build_ext": OptionalBuildExt},
)
