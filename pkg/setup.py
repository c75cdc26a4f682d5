from setuptools import Extension, setup
from Cython.Build import cythonize
import numpy as np

ext_modules = [
    Extension(
        "hybridcd._kernels",
        ["src/hybridcd/_kernels.pyx"],
        include_dirs=[np.get_include()],
        # contraction into FMA would break bit-equality with the numpy fallback
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
]

setup(ext_modules=cythonize(ext_modules, language_level=3))
