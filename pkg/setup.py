import os
import shutil
import subprocess
import tempfile

from setuptools import Extension, setup

FLAGS = ["-O3", "-fcx-limited-range"]
MACROS = [("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")]


def _have_fftw() -> bool:
    """Probe whether a C compiler can build and link against libfftw3."""
    cc = os.environ.get("CC", "cc")
    if shutil.which(cc) is None:
        return False
    with tempfile.TemporaryDirectory() as tmp:
        src = os.path.join(tmp, "probe.c")
        with open(src, "w") as fh:
            fh.write("#include <fftw3.h>\nint main(void){fftw_free(fftw_malloc(8));return 0;}\n")
        res = subprocess.run([cc, src, "-lfftw3", "-o", os.path.join(tmp, "probe")],
                             capture_output=True)
        return res.returncode == 0


ext_modules = []
if not os.environ.get("ACCS_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:  # pure-python install
        pass
    else:
        exts = [
            Extension("accs._ckernels", ["src/accs/_ckernels.pyx"], include_dirs=[np.get_include()],
                      define_macros=MACROS, extra_compile_args=FLAGS),
        ]
        if not os.environ.get("ACCS_NO_FFTW") and _have_fftw():
            exts.append(
                Extension("accs._cfftw", ["src/accs/_cfftw.pyx"], include_dirs=[np.get_include()],
                          define_macros=MACROS, extra_compile_args=FLAGS, libraries=["fftw3"])
            )
        ext_modules = cythonize(exts, compiler_directives={"language_level": "3"})

setup(ext_modules=ext_modules)
