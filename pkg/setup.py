import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("TANGLESIM_NO_EXT"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "tanglesim._kernels._accel",
                    ["src/tanglesim/_kernels/_accel.pyx"],
                )
            ],
            language_level=3,
        )
    except ImportError:
        # No Cython available: install pure-Python only, the kernel shim
        # falls back at import time.
        ext_modules = []

setup(ext_modules=ext_modules)
