"""Backend selection for the hot loops.

The compiled extension is used when it imports; setting the environment
variable ``QSMARKOV_PURE_PYTHON=1`` forces the NumPy fallback.
"""

import os

import numpy as np

from . import _pykernels

try:
    if os.environ.get("QSMARKOV_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-Python backend requested")
    from . import _ckernels
except ImportError:
    _ckernels = None

BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    BACKENDS["cython"] = _ckernels

BACKEND = "cython" if _ckernels is not None else "python"
_impl = BACKENDS[BACKEND]


def get_backend(name=None):
    """Kernel module by name (``"cython"`` or ``"python"``); default is the active one."""
    if name is None:
        return _impl
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} is not available") from None


def sample_symbols(u, lam_cdf, cdfs, backend=None):
    """Paths (int32, shape of ``u``) drawn by inverse CDF; see ``_ckernels``."""
    impl = get_backend(backend)
    return impl.sample_symbols(
        np.ascontiguousarray(u, dtype=np.float64),
        np.ascontiguousarray(lam_cdf, dtype=np.float64),
        np.ascontiguousarray(cdfs, dtype=np.float64),
    )


def path_log_sum(paths, table, offset=0, backend=None):
    """``sum_k table[k, x[k+offset], x[k+offset+1]]`` for every path row."""
    impl = get_backend(backend)
    return impl.path_log_sum(
        np.ascontiguousarray(paths, dtype=np.int32),
        np.ascontiguousarray(table, dtype=np.float64),
        int(offset),
    )
