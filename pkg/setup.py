import os

from setuptools import Extension, setup

# HHSKETCH_NO_EXT=1 skips the compiled kernels; the package then runs on the
# pure-Python fallback.
ext_modules = []
if not os.environ.get("HHSKETCH_NO_EXT"):
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "hhsketch._ckernels",
                ["src/hhsketch/_ckernels.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )

setup(ext_modules=ext_modules)
