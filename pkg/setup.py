import os

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# host-tuned by default so the power loops use the widest libmvec variant;
# STABLELD_PORTABLE=1 builds for the baseline ISA
_arch = [] if os.environ.get("STABLELD_PORTABLE") else ["-march=native", "-mprefer-vector-width=512"]

extensions = [
    Extension(
        "stableld._ckernels",
        ["src/stableld/_ckernels.pyx"],
        include_dirs=[np.get_include()],
        # fast-math lets GCC call glibc's vector math library; NaN handling
        # in the kernels does not rely on IEEE propagation
        extra_compile_args=["-O3", "-ffast-math"] + _arch,
        extra_link_args=["-lmvec"],
    )
]

setup(ext_modules=cythonize(extensions, language_level=3))
