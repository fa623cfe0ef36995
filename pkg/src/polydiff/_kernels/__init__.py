"""Hot kernels with a compiled backend and a numpy fallback.

The Cython extension is used when it was built; otherwise, or when the
environment variable ``POLYDIFF_PURE_PYTHON`` is set to a non-empty value
other than ``0``, the numpy implementation is used.  ``BACKEND`` names the
active one.
"""

import os

from . import _fallback

_force_python = os.environ.get("POLYDIFF_PURE_PYTHON", "") not in ("", "0")

try:
    if _force_python:
        raise ImportError("pure python backend requested")
    from . import _ckernels as _impl
except ImportError:
    _impl = _fallback

BACKEND = _impl.BACKEND
poly_eval = _impl.poly_eval
poly_jacobian = _impl.poly_jacobian
dykstra = _impl.dykstra
invert_poly = _impl.invert_poly


def available_backends():
    """Return the kernel modules that can be imported, keyed by name."""
    found = {"python": _fallback}
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        found["cython"] = _ckernels
    return found
