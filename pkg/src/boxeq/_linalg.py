"""Small dense linear-algebra helpers used by every solver path."""

import numpy as np

from .errors import SingularMatrix, SingularSystem

SV_THRESHOLD = 1e-12


def sv_ratio(a, scale=None):
    """sigma_min / sigma_max of a square matrix; 0 for the zero matrix.

    ``scale`` replaces sigma_max when larger: for a matrix obtained by
    cancellation, pass the size of the terms that cancelled, so a result
    that is zero up to rounding is recognised even when it is 1x1.
    """
    a = np.asarray(a)
    if a.size == 0:
        return 1.0
    s = np.linalg.svd(a, compute_uv=False)
    top = max(float(s[0]), float(scale or 0.0))
    if top == 0:
        return 0.0
    return float(s[-1] / top)


def is_numerically_invertible(a, threshold=SV_THRESHOLD):
    return sv_ratio(a) >= threshold


def abs_det(a):
    return float(abs(np.linalg.det(np.asarray(a))))


def require_invertible(a, name, threshold=SV_THRESHOLD, kind=SingularSystem, detail="", scale=None):
    """Return ``(|det|, ratio)`` or raise ``kind`` if ``a`` fails the test."""
    ratio = sv_ratio(a, scale)
    if ratio < threshold:
        raise kind(name, ratio, threshold, detail)
    return abs_det(a), ratio


def require_invertible_matrix(a, name, threshold=SV_THRESHOLD):
    return require_invertible(a, name, threshold, kind=SingularMatrix)


def as_matrix(a, d=None, name="matrix"):
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")
    if d is not None and m.shape[0] != d:
        raise ValueError(f"{name} must be {d}x{d}, got {m.shape}")
    return m


def check_same_square(*mats):
    """Validate that all inputs are square of one size; return that size."""
    shapes = {np.shape(m) for m in mats}
    if len(shapes) != 1:
        raise ValueError(f"dimension mismatch: {sorted(shapes)}")
    (shape,) = shapes
    if len(shape) != 2 or shape[0] != shape[1]:
        raise ValueError(f"expected square matrices, got shape {shape}")
    return shape[0]


def frozen(a):
    """A read-only complex copy of ``a``."""
    out = np.array(a, dtype=complex)
    out.setflags(write=False)
    return out
