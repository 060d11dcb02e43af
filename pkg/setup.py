import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("CONVEXBP_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "convexbp._kernel_cy",
                    ["src/convexbp/_kernel_cy.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level=3,
        )
    except ImportError:
        # No Cython: the package still works on the pure-Python kernel.
        ext_modules = []

setup(ext_modules=ext_modules)
