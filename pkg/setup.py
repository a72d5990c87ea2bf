"""Build script: compiles the optional Cython stepper kernel.

If Cython or a C compiler is unavailable the package installs without the
extension and falls back to the pure-Python stepper at import time.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "floquetlab.engine._core",
                ["src/floquetlab/engine/_core.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # noqa: BLE001 - any build-chain gap means pure fallback
    print(f"floquetlab: building without compiled kernel ({exc})")

setup(ext_modules=ext_modules)
