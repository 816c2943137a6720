"""Build script: compiles the sparse exact-rank kernel when Cython is usable.

The package is fully functional without the extension (a pure-Python kernel
is selected at import time), so any build failure here downgrades to a
pure-Python install instead of aborting.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("SCHOBERKIT_NO_EXT"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            ["src/schoberkit/_rankcore.pyx"], language_level=3
        )
    except Exception as exc:  # pragma: no cover - build-environment dependent
        print(f"schoberkit: skipping compiled kernel ({exc!r})")
        ext_modules = []

setup(ext_modules=ext_modules)
