"""Optional compiled-kernel build.

The package runs fine without the extension (a pure-Python fallback is
selected at import); building it just makes the relaxation solver fast:

    python setup.py build_ext --inplace
"""

from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "avatarforge._kernels._cykernels",
                ["src/avatarforge/_kernels/_cykernels.pyx"],
                include_dirs=[np.get_include()],
                # No fast-math / FP contraction: the pure-Python fallback must
                # stay bitwise identical to this extension.
                extra_compile_args=["-O2", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
