"""Build script for the optional native satisfaction kernel.

The package works without the extension (a pure-Python kernel is selected
at import time), so the extension is marked optional: a failed compile
degrades to the fallback instead of failing the install.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "kbcomplete._kernels._native",
                ["src/kbcomplete/_kernels/_native.pyx"],
                optional=True,
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )

setup(ext_modules=ext_modules)
