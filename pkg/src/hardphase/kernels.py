"""Backend selection for the hot loops.

The compiled extension is used when it imports; setting the environment
variable ``HARDPHASE_KERNELS=python`` forces the pure Python fallback.
"""
import os

from . import _pykernels

if os.environ.get("HARDPHASE_KERNELS", "").lower() == "python":
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = "compiled" if _impl is not _pykernels else "python"

tov_rk4 = _impl.tov_rk4
pressure_rk4 = _impl.pressure_rk4
sturm_count = _impl.sturm_count
shifted_solve = _impl.shifted_solve
leapfrog = _impl.leapfrog


def available_backends():
    """Return a dict name -> kernel module for every importable backend."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels
        out["compiled"] = _ckernels
    except ImportError:
        pass
    return out
