"""Kernel backend selection.

The compiled extension is used when it imports; set ``DGCM_PURE_PYTHON=1``
to force the numpy fallback.  ``BACKEND`` names the active choice.
"""

import os

import numpy as np

from . import _fallback

if os.environ.get("DGCM_PURE_PYTHON"):
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "compiled"
    except ImportError:
        _impl = _fallback
        BACKEND = "python"


def mc_statistics(gen, normals, p_inf, full_sum, backend=None):
    impl = _pick(backend)
    return impl.mc_statistics(_c(gen), _c(normals), bool(p_inf), bool(full_sum))


def path_statistic(values, p_inf, full_sum, backend=None):
    impl = _pick(backend)
    return float(impl.path_statistic(_c(values), bool(p_inf), bool(full_sum)))


def available_backends():
    out = ["python"]
    if _impl is not _fallback or _compiled() is not None:
        out.insert(0, "compiled")
    return out


def _compiled():
    try:
        from . import _kernels
    except ImportError:
        return None
    return _kernels


def _pick(backend):
    if backend is None:
        return _impl
    if backend == "python":
        return _fallback
    if backend == "compiled":
        mod = _compiled()
        if mod is None:
            raise ImportError("compiled kernels are not built")
        return mod
    raise ValueError(f"unknown backend {backend!r}")


def _c(a):
    return np.ascontiguousarray(a, dtype=np.float64)
