import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

kernels = Extension(
    "ptq.sim._kernels",
    ["src/ptq/sim/_kernels.pyx"],
    include_dirs=[np.get_include()],
    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    extra_compile_args=["-O3", "-fopenmp"],
    extra_link_args=["-fopenmp"],
)

setup(
    ext_modules=cythonize(
        [kernels],
        compiler_directives={"language_level": "3", "boundscheck": False, "wraparound": False},
    ),
)
