"""Build the optional Cython episode kernel.

The package works without it: ``supervised_rl._backend`` falls back to the
pure-Python kernel when the extension is missing.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("SUPERVISED_RL_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "supervised_rl._qkernel",
                    ["src/supervised_rl/_qkernel.pyx"],
                    include_dirs=[np.get_include()],
                    # no fp contraction: results must match the Python kernel bit for bit
                    extra_compile_args=["-O2", "-ffp-contract=off"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
