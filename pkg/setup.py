"""Build the optional compiled RK4 kernels.

The extension is marked optional: if Cython or a compiler is missing the
package installs with the pure-Python kernels only.
"""
from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "sqcir._ckernels",
                ["src/sqcir/_ckernels.pyx"],
                include_dirs=[numpy.get_include()],
                # no fast-math / FMA contraction: results must match the Python kernels bit for bit
                extra_compile_args=["-O3", "-ffp-contract=off"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
