"""Build shim for the optional compiled split-search kernel.

The package is pure Python apart from gprwall._split, a Cython translation of
the decision-tree split scan.  If Cython or a C compiler is unavailable the
extension is skipped and the package falls back to the numpy implementation
(gprwall._split_py) at import time.
"""

from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext = Extension(
        "gprwall._split",
        ["src/gprwall/_split.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        optional=True,
    )
    ext_modules = cythonize([ext], language_level=3)

setup(ext_modules=ext_modules)
