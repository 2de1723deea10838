import sys

from setuptools import setup

# The Gibbs sampling kernel is optional: without Cython (or a compiler)
# the package falls back to the pure-Python twin at import time.
ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/stdcache/topics/_gibbs.pyx"],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "initializedcheck": False,
            "cdivision": True,
        },
    )
except ImportError:
    sys.stderr.write("Cython unavailable: building stdcache without the compiled sampler\n")

setup(ext_modules=ext_modules)
