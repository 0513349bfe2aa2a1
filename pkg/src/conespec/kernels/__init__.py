"""Hot-loop dispatch.

The compiled (numba) implementations are used by default. Setting the
environment variable ``CONESPEC_NO_NUMBA=1`` before import selects the
pure-numpy twins instead; so does a missing numba install.
"""

import os

from . import _numpy

BACKEND = "numpy"

if os.environ.get("CONESPEC_NO_NUMBA", "").strip() not in ("", "0"):
    _impl = _numpy
else:
    try:
        from . import _numba as _impl

        BACKEND = "numba"
    except ImportError:  # pragma: no cover - numba is a declared dependency
        _impl = _numpy

band_apply = _impl.band_apply
vec_norm = _impl.vec_norm
power_norms = _impl.power_norms
orbit_lognorms = _impl.orbit_lognorms
envelope = _impl.envelope

__all__ = [
    "BACKEND",
    "band_apply",
    "vec_norm",
    "power_norms",
    "orbit_lognorms",
    "envelope",
]
