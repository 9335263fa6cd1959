"""Kernel backend selection.

The sequential scans (linear_scan, affine_ivp_scan) exist twice: as a
Cython extension (_speedups) and as a pure-numpy reference. The compiled
backend is used when importable; set IMPULSEDDE_PURE_PYTHON=1 to force
the reference. picard_forcing is fully vectorized numpy either way, so
only the reference carries it.
"""
import os

from . import reference

if os.environ.get("IMPULSEDDE_PURE_PYTHON", "").strip() not in ("", "0"):
    _impl = reference
else:
    try:
        from . import _speedups as _impl
    except ImportError:
        _impl = reference

BACKEND = _impl.BACKEND
linear_scan = _impl.linear_scan
affine_ivp_scan = _impl.affine_ivp_scan
picard_forcing = reference.picard_forcing
