import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# -ffp-contract=off keeps a*b-c un-fused so results match the numpy fallback bit for bit.
extensions = [
    Extension(
        f"ppa_imitation.milp.{name}",
        [f"src/ppa_imitation/milp/{name}.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O2", "-ffp-contract=off"],
    )
    for name in ("_lp_core", "_assign_core")
]

setup(
    ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}),
)
