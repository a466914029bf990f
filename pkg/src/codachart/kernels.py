"""Kernel backend selection.

The compiled extension is used when it imports; otherwise, or when
``CODACHART_PURE_PYTHON`` is set to a non-empty value other than ``0``,
the NumPy implementation is used.  Both expose ``ncx2_cdf`` and
``simulate_runs`` with identical signatures.
"""

import os

from . import _kernels_py

_impl = _kernels_py
if os.environ.get("CODACHART_PURE_PYTHON", "") in ("", "0"):
    try:
        from . import _kernels as _impl
    except ImportError:  # extension not built
        _impl = _kernels_py

BACKEND = _impl.BACKEND


def get_backend(name=None):
    """Return the kernel module for ``name`` (``"compiled"``/``"python"``/None=active)."""
    if name is None:
        return _impl
    if name == "python":
        return _kernels_py
    if name == "compiled":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown kernel backend {name!r}")


def compiled_available():
    try:
        from . import _kernels  # noqa: F401
    except ImportError:
        return False
    return True


def ncx2_cdf(x, df, lam, tol=1e-13):
    return _impl.ncx2_cdf(x, df, lam, tol)


def simulate_runs(*args):
    return _impl.simulate_runs(*args)
