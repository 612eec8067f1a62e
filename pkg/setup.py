"""Build script for the optional compiled kernels.

The package is fully functional without the extension; taxoprobe.kernels
falls back to the pure-Python implementation when the compiled module is
absent (see src/taxoprobe/kernels.py).
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = []
if cythonize is not None:
    extensions = cythonize(
        [
            Extension(
                "taxoprobe._speedups",
                ["src/taxoprobe/_speedups.pyx"],
                extra_compile_args=["-O2"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=extensions)
