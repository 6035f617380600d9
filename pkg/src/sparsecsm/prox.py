"""Soft shrinkage, the proximal map of the l1 norm.

For complex data the l1 norm is taken as ``sum |Re| + |Im|``, so the
proximal map acts on real and imaginary parts independently.
"""

import numpy as np

from .errors import DimensionError, ParameterError


def shrink_real(b, lam):
    """``sgn(b) * max(|b| - lam, 0)`` for a scalar or real array ``b``."""
    lam_arr = np.asarray(lam, dtype=np.float64)
    if np.any(lam_arr < 0) or not np.all(np.isfinite(lam_arr)):
        raise ParameterError("shrinkage threshold must be finite and >= 0")
    out = _shrink(np.asarray(b, dtype=np.float64), lam_arr)
    if np.ndim(out) == 0:
        return float(out)
    return out


def _shrink(b, lam):
    return np.sign(b) * np.maximum(np.abs(b) - lam, 0.0)


def threshold_matrix(t, shape=None):
    """Validate entrywise thresholds: real, finite, non-negative."""
    arr = np.asarray(t)
    if np.iscomplexobj(arr):
        raise ParameterError("thresholds must be real-valued")
    arr = arr.astype(np.float64)
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise ParameterError("thresholds must be finite and >= 0")
    if shape is not None and arr.ndim and arr.shape != tuple(shape):
        raise DimensionError(f"threshold shape {arr.shape} != {tuple(shape)}")
    return arr


def shrink_complex(b, t):
    """Entrywise complex shrinkage with scalar or per-entry thresholds ``t``."""
    b = np.asarray(b, dtype=np.complex128)
    t = threshold_matrix(t, b.shape)
    out = np.empty_like(b)
    out.real = _shrink(b.real, t)
    out.imag = _shrink(b.imag, t)
    return out


def shrink_complex_scalar(z, t):
    """Single-entry form of :func:`shrink_complex`; bit-identical to it."""
    if t < 0 or not np.isfinite(t):
        raise ParameterError("thresholds must be finite and >= 0")
    z = complex(z)
    t = np.float64(t)
    re = _shrink(np.float64(z.real), t)
    im = _shrink(np.float64(z.imag), t)
    return complex(re, im)
