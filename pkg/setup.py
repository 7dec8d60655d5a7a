import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# The stencil kernel is optional: if the compiler is unavailable the package
# falls back to the pure-Python implementation at import time.
extensions = [
    Extension(
        "aputherm._kernels._stencil",
        ["src/aputherm/_kernels/_stencil.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        optional=True,
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={"language_level": "3"},
    )
)
