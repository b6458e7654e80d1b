"""Backend selection for the hot loops.

The compiled extension is preferred; set ``RELMEAS_PURE_PYTHON=1`` to force
the numpy fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if not os.environ.get("RELMEAS_PURE_PYTHON"):
    try:
        from . import _kernels_c as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        pass


def backend(name=None):
    """Return the kernel module for ``name`` (``"cython"``/``"python"``) or the active one."""
    if name is None:
        return _impl
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels_c
        return _kernels_c
    raise ValueError(f"unknown backend {name!r}")


def nudft(coeffs, p, xs):
    return _impl.nudft(coeffs, p, xs)


def gram_diagonal(energy, rhohat_sq, extent):
    return _impl.gram_diagonal(energy, rhohat_sq, float(extent))


def lattice_convolve(f_sep, g):
    return _impl.lattice_convolve(f_sep, g)
