"""Backend selection for the hot kernels.

The compiled extension is used when importable; set
``CORRIDORSTRESS_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _pykernels

if os.environ.get("CORRIDORSTRESS_PURE_PYTHON"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND: str = _impl.BACKEND
nearest_hospital = _impl.nearest_hospital
trapezoid_area = _impl.trapezoid_area
field_area = _impl.field_area
Workspace = _impl.Workspace

# curve helpers are cheap and shared by both backends
access_points = _pykernels.access_points
integrate_points = _pykernels.integrate_points


def backends():
    """All importable backends, keyed by name (used by tests and benchmarks)."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        out["cython"] = _ckernels
    return out
