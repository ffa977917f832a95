from setuptools import setup, Extension
from Cython.Build import cythonize
import numpy as np


ext_modules = [
    Extension(
        "rescal_transitive._kernels",
        ["src/rescal_transitive/_kernels.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"],
        optional=True,
    ),
]


setup(
    ext_modules=cythonize(ext_modules, language_level=3),
)
