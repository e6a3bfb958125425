import numpy
from setuptools import setup
from setuptools.extension import Extension

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "lotsub._simplex",
                sources=["src/lotsub/_simplex.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    # pure-Python fallback in lotsub._simplex_py is used at import time
    ext_modules = []

setup(ext_modules=ext_modules)
