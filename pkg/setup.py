"""Build script: compiles the optional Cython kernel extension.

The extension is marked optional so a missing compiler degrades to the
pure-Python kernels instead of failing the install.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("CORPUSFORGE_SKIP_NATIVE") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "corpusforge._kernels._native",
                    ["src/corpusforge/_kernels/_native.pyx"],
                    extra_compile_args=["-O3"],
                    optional=True,
                )
            ],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
