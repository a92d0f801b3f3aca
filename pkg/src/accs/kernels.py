"""Kernel backend selection.

The compiled extension is preferred; setting the environment variable
``ACCS_PURE_PYTHON=1`` (or a failed import) selects the numpy fallback.
When the compiled backend is active and the FFTW module was built, 1D DCT
operator paths use fused FFTW kernels as well.
"""

from __future__ import annotations

import contextlib
import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels
_fftw = None

if not os.environ.get("ACCS_PURE_PYTHON"):
    try:
        from . import _ckernels as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels
    else:
        try:
            from . import _cfftw as _fftw
        except ImportError:
            _fftw = None


def get_backend(name: str | None = None):
    """Return a kernel module by name (``"cython"``/``"python"``) or the active one."""
    if name is None:
        return _impl
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels
        return _ckernels
    raise ValueError(f"unknown kernel backend {name!r}")


def available_backends() -> list[str]:
    names = ["python"]
    try:
        from . import _ckernels  # noqa: F401
        names.insert(0, "cython")
    except ImportError:
        pass
    return names


def set_backend(name: str) -> None:
    """Switch the active backend for this process."""
    global BACKEND, _impl, _fftw
    _impl = get_backend(name)
    BACKEND = name
    _fftw = None
    if name == "cython":
        try:
            from . import _cfftw as _fftw
        except ImportError:
            _fftw = None


@contextlib.contextmanager
def use_backend(name: str):
    prev = BACKEND
    set_backend(name)
    try:
        yield
    finally:
        set_backend(prev)


def dct_plan(N: int, m: int):
    """Fused FFTW DCT plan for ``(N, m)`` batches, or ``None`` if unavailable."""
    if _fftw is None:
        return None
    return _fftw.get_plan(N, m)
