"""Build hook for the optional compiled kernel.

The package works without the extension: splocal.kernels falls back to the
pure-Python implementation when the compiled module is absent or when
SPLOCAL_PURE_PYTHON is set.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/splocal/_kernels.pyx"],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
