"""Build script for the optional compiled operator kernel.

The package is fully functional without the extension (poisonring._backend
falls back to the pure-Python kernel), so a failed compile only costs speed.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "poisonring._opkernel",
                ["src/poisonring/_opkernel.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
else:
    ext_modules = []

setup(ext_modules=ext_modules)
