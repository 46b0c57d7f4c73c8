"""Build script: compiles the optional Monte Carlo kernel extension.

The package works without the extension (a pure numpy fallback is selected
at import time), so any failure to compile is downgraded to a warning.
"""

import sys

from setuptools import setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """build_ext that tolerates a missing C toolchain."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        print(
            f"WARNING: building the compiled kernels failed ({exc}); "
            "falling back to the pure-Python kernels.",
            file=sys.stderr,
        )


def _extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        print("WARNING: Cython not available; skipping compiled kernels.", file=sys.stderr)
        return []
    from setuptools import Extension

    ext = Extension(
        "starqnet._kernels._core",
        ["src/starqnet/_kernels/_core.pyx"],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(
    ext_modules=_extensions(),
    cmdclass={"build_ext": optional_build_ext},
)
