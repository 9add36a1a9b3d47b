"""Build script: compiles the optional Cython kernel extension.

The package works without the extension (a pure-Python mirror of every
kernel ships in acufusion._kernels._reference); if Cython or a C compiler
is missing the build silently falls back to pure Python.
"""

import os

from setuptools import setup
from setuptools.command.build_ext import build_ext


def _extensions():
    if os.environ.get("ACUFUSION_NO_EXT"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    from setuptools import Extension

    ext = Extension(
        "acufusion._kernels._native",
        ["src/acufusion/_kernels/_native.pyx"],
    )
    return cythonize([ext], language_level=3)


class OptionalBuildExt(build_ext):
    """Skip the extension instead of failing the whole install."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            print(f"acufusion: skipping native kernels ({exc}); "
                  "pure-Python fallback will be used")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"acufusion: failed to build {ext.name} ({exc}); "
                  "pure-Python fallback will be used")


setup(
    ext_modules=_extensions(),
    cmdclass={"build_ext": OptionalBuildExt},
)
