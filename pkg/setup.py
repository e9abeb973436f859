"""Build the optional compiled replay kernel; the package works without it."""

from setuptools import setup
from setuptools.command.build_ext import build_ext

try:
    from Cython.Build import cythonize
except ImportError:  # fall back to the pure-Python kernel
    ext_modules = []
else:
    ext_modules = cythonize(
        ["src/agmon/kernel/_ckernel.pyx"],
        compiler_directives={"language_level": "3"},
        quiet=True,
    )


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # pragma: no cover - compiler missing
            print(f"warning: native kernel not built ({exc}); using pure Python")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # pragma: no cover
            print(f"warning: failed to build {ext.name} ({exc}); using pure Python")


setup(ext_modules=ext_modules, cmdclass={"build_ext": OptionalBuildExt})
