"""Build script for the optional compiled kernel.

The package works without the extension: didsens.kernels falls back to a
vectorized numpy implementation when the compiled module is absent.
"""

from setuptools import setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/didsens/kernels/_signflip.pyx"],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
