"""Sup-norm geometry and the map between points and integer bin indices.

A bin of width ``h`` indexed by ``k`` is the half-open hypercube
``[k*h, (k+1)*h)``. Points are float64 arrays, keys are int64 arrays.
"""

import numpy as np

from .errors import DataError

# Largest |x/h| we accept before the integer conversion could wrap.
_MAX_QUOTIENT = 2.0**62
_BLOCK = 1 << 15


def as_points(points):
    """Coerce ``points`` to a finite float64 array of shape (n, d).

    A 1-d input is read as n points in dimension one.
    """
    try:
        x = np.asarray(points, dtype=np.float64)
    except ValueError as exc:
        raise DataError(f"points have mixed dimensions or non-numeric entries ({exc})") from None
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    if x.ndim != 2:
        raise DataError(f"points must be a 2-d array (n, d), got shape {x.shape}")
    if x.shape[0] == 0:
        raise DataError("no data")
    if x.shape[1] == 0:
        raise DataError("points must have dimension d >= 1")
    if not np.isfinite(x).all():
        raise DataError("points contain non-finite coordinates")
    return x


def _as_vector(a):
    v = np.atleast_1d(np.asarray(a, dtype=np.float64))
    if v.ndim != 1:
        raise DataError(f"expected a single point, got shape {v.shape}")
    return v


def sup_dist(a, b):
    """Return max_i |a_i - b_i|."""
    a, b = _as_vector(a), _as_vector(b)
    if a.shape != b.shape:
        raise DataError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    return float(np.max(np.abs(a - b)))


def _check_width(h):
    h = float(h)
    if not h > 0 or not np.isfinite(h):
        raise ValueError(f"bin width must be positive and finite, got {h!r}")
    return h


def bin_index(x, h):
    """Integer index of the bin of width ``h`` containing ``x``.

    Works on a single point (shape (d,)) or a batch (shape (n, d)). The
    result is floor(x/h), snapped by one where rounding in the quotient
    would put ``x`` outside ``[k*h, (k+1)*h)`` as evaluated in floating
    point. This makes ``bin_index(bin_origin(k, h), h) == k`` hold exactly.
    """
    h = _check_width(h)
    x = np.asarray(x, dtype=np.float64)
    if not np.isfinite(x).all():
        raise DataError("non-finite coordinate")
    if x.size and max(-x.min(), x.max()) >= _MAX_QUOTIENT * h:
        raise DataError(f"coordinate/width ratio exceeds the integer range (h={h!r})")
    out = np.empty(x.shape, dtype=np.int64)
    flat_x, flat_k = x.reshape(-1), out.reshape(-1)
    # Blocked so the temporaries stay in cache on large inputs.
    for i in range(0, flat_x.size, _BLOCK):
        xs = flat_x[i : i + _BLOCK]
        q = xs / h
        np.floor(q, out=q)
        t = q * h
        q -= t > xs
        np.add(q, 1.0, out=t)
        t *= h
        q += t <= xs
        flat_k[i : i + _BLOCK] = q
    return out


def bin_origin(k, h):
    """Lower corner ``k*h`` of bin ``k``."""
    h = _check_width(h)
    return np.asarray(k, dtype=np.int64) * h


def key_dist(a, b):
    """Sup-norm distance between integer keys; broadcasts over rows of ``a``."""
    return np.max(np.abs(np.asarray(a, dtype=np.int64) - np.asarray(b, dtype=np.int64)), axis=-1)
