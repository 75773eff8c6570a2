import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("cfbounds._ckernels", ["src/cfbounds/_ckernels.pyx"],
                   include_dirs=[np.get_include()])],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
