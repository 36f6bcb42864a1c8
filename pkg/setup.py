"""Build script for the optional compiled kernels.

The package is fully functional without the extension: ``corpuscraft.kernels``
falls back to pure-Python implementations when ``corpuscraft._speedups`` is
missing, so the extension is marked optional and a failed compile does not
fail the install.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "corpuscraft._speedups",
                ["src/corpuscraft/_speedups.pyx"],
                optional=True,
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
