import platform
import sys

from Cython.Build import cythonize
from setuptools import Extension, setup

compile_args = ["-O3", "-fno-math-errno", "-fopenmp-simd"]
macros = []
libraries = ["m"]
# glibc ships SIMD exp/tanh (libmvec) on x86_64 Linux
if sys.platform.startswith("linux") and platform.machine() in ("x86_64", "AMD64"):
    macros.append(("WAVESEQ_LIBMVEC", "1"))
    libraries.insert(0, "mvec")

extensions = [
    Extension(
        "waveseq.net._kernels",
        ["src/waveseq/net/_kernels.pyx"],
        include_dirs=["src/waveseq/net"],
        depends=["src/waveseq/net/_gates.h"],
        define_macros=macros,
        libraries=libraries,
        extra_compile_args=compile_args,
        optional=True,
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={"language_level": "3"},
    )
)
