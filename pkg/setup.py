"""Build script for the compiled game-loop kernels.

The package works without the extension (a pure-Python twin of every kernel
lives in dpope._kernels.pure); set DPOPE_NO_EXT=1 to skip compilation.
No fast-math flags: the compiled kernels must stay bit-identical to the
pure-Python reference.
"""
import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("DPOPE_NO_EXT"):
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("dpope._kernels._fast", ["src/dpope/_kernels/_fast.pyx"])],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
