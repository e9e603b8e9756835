import os

import numpy
from setuptools import setup

ext_modules = []
if not os.environ.get("COPOLYMER_NO_EXT"):
    try:
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext = Extension(
            "copolymer._core",
            ["src/copolymer/_core.pyx"],
            include_dirs=[numpy.get_include()],
            extra_compile_args=["-O3"],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        )
        ext_modules = cythonize([ext], language_level=3,
                                compiler_directives={"boundscheck": False,
                                                     "wraparound": False,
                                                     "cdivision": True})

setup(ext_modules=ext_modules)
