"""Build script: compiles the slot-loop kernel when Cython is available.

The package works without the extension (ehsim.kernel falls back to the
pure-Python implementation), so a missing compiler or Cython is not fatal.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "ehsim._kernel",
                ["src/ehsim/_kernel.pyx"],
                # -ffp-contract=off: no fused multiply-add, so results are
                # bit-identical to the pure-Python fallback.
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
