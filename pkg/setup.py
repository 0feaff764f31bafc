"""Build script: compiles the optional fast-loop extension.

The package is fully functional without the extension (a pure-Python
fallback is selected at import time); set SAMLAB_REQUIRE_EXT=1 to turn a
failed extension build into a hard error, or SAMLAB_SKIP_EXT=1 to skip
compilation entirely.
"""

import os
import sys

from setuptools import setup

ext_modules = []
if os.environ.get("SAMLAB_SKIP_EXT", "") != "1":
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext = Extension(
            "samlab._fastloops",
            ["src/samlab/_fastloops.pyx"],
            include_dirs=[numpy.get_include()],
            extra_compile_args=["-O3"],
        )
        ext_modules = cythonize(
            [ext],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )
    except Exception as exc:  # pragma: no cover - build environment dependent
        if os.environ.get("SAMLAB_REQUIRE_EXT", "") == "1":
            raise
        sys.stderr.write(
            f"samlab: skipping fast-loop extension ({exc!r}); "
            "pure-Python kernels will be used\n"
        )

setup(ext_modules=ext_modules)
