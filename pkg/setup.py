"""Build script: compiles the optional Cython kernel extension.

The package works without the extension (pure numpy fallback is selected at
import time), so any build failure here downgrades to a warning.
"""

import sys

from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "cobotkit._speedups",
                ["src/cobotkit/_speedups.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except Exception as exc:  # pragma: no cover - build environment dependent
    print(f"cobotkit: skipping compiled kernels ({exc})", file=sys.stderr)

setup(ext_modules=ext_modules)
