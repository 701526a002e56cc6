from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

# -ffp-contract=off keeps the compiled kernels bit-identical to the pure
# Python fallback (no FMA contraction); the backend parity tests rely on it.
extensions = [
    Extension(
        "fedclust.backends._ccore",
        sources=["src/fedclust/backends/_ccore.pyx"],
        extra_compile_args=["-O2", "-ffp-contract=off"],
        optional=True,
    )
]

if cythonize is not None:
    ext_modules = cythonize(
        extensions,
        language_level=3,
        compiler_directives={"boundscheck": False, "wraparound": False, "cdivision": True},
    )
else:
    ext_modules = []

setup(ext_modules=ext_modules)
