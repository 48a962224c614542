"""Build the optional Cython patch kernels.

The package works without them; ``onair._kernels`` falls back to numpy
when the extension is missing.
"""
import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("ONAIR_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "onair._kernels._ckernels",
                    ["src/onair/_kernels/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
