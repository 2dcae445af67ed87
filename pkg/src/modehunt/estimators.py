"""Mono-scale and multi-scale histogram estimators of the global mode."""

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import InvariantError
from .histogram import argmax_bin, argmax_keys, build_histogram, count_keys
from .lattice import as_points, bin_index, bin_origin


@dataclass(frozen=True)
class MonoParams:
    h: float

    def __post_init__(self):
        if not (self.h > 0 and math.isfinite(self.h)):
            raise ValueError(f"bin width h must be positive and finite, got {self.h!r}")


@dataclass(frozen=True)
class MultiParams:
    """Scale multiplier ``b`` and retention margin ``kappa`` (in bins).

    With ``rescale`` the data are first mapped affinely onto [0, 1]^d
    (per-coordinate min-max) and the estimate is mapped back.
    """

    b: float = 2.0
    kappa: int = 2
    rescale: bool = False

    def __post_init__(self):
        if not (self.b >= 2 and math.isfinite(self.b)):
            raise ValueError(f"scale multiplier b must be >= 2, got {self.b!r}")
        if int(self.kappa) != self.kappa or self.kappa < 0:
            raise ValueError(f"margin kappa must be a nonnegative integer, got {self.kappa!r}")


def theoretical_bandwidth(n, d, beta, c=1.0):
    """Oracle bin width ``c * n**(-1/(d + 2*beta))``."""
    if n < 1 or d < 1 or not beta > 0 or not c > 0:
        raise ValueError("n, d, beta and c must all be positive")
    # Base-10 form so that decimal sample sizes give exact widths (1e5, beta=2 -> 0.1).
    return c * 10.0 ** (-math.log10(n) / (d + 2.0 * beta))


def max_scale(n, d, b):
    """Finest scale ``floor(log(n) / (d log b))``, i.e. the largest s with
    b**(d*s) <= n, computed without floating-point floor surprises."""
    if n < 1 or d < 1 or not b > 1:
        raise ValueError("need n >= 1, d >= 1, b > 1")
    s = int(math.floor(math.log(n) / (d * math.log(b))))
    while s > 0 and b ** (d * s) > n:
        s -= 1
    while b ** (d * (s + 1)) <= n:
        s += 1
    return s


def mono_mode(points, params):
    """Corner of the fullest bin of width ``h``.

    ``params`` is a :class:`MonoParams` or a bare bin width.
    """
    h = params.h if isinstance(params, MonoParams) else MonoParams(float(params)).h
    k = argmax_bin(build_histogram(points, h))
    return bin_origin(k, h)


class ScaleStep(NamedTuple):
    scale: int
    width: float
    k_hat: np.ndarray
    n_binned: int
    active: np.ndarray  # indices (into the input) retained after this scale


def _refine(x, b, kappa):
    n, d = x.shape
    s_max = max(max_scale(n, d, b), 1)
    active = np.arange(n)
    xa = x
    for s in range(1, s_max + 1):
        h = float(b) ** (-s)
        keys = bin_index(xa, h)
        uniq, counts = count_keys(keys)
        k_hat = argmax_keys(uniq, counts)
        keep = _within(keys, k_hat, kappa)
        if not keep.any():
            raise InvariantError(f"active set emptied at scale {s}")
        n_binned = len(xa)
        active, xa = active[keep], xa[keep]
        yield ScaleStep(s, h, k_hat, n_binned, active)


def _within(keys, center, kappa):
    """Rows of ``keys`` within sup-norm distance ``kappa`` of ``center``."""
    keep = np.ones(len(keys), dtype=bool)
    for j, c in enumerate(center.tolist()):
        col = keys[:, j]
        keep &= col >= c - kappa
        keep &= col <= c + kappa
    return keep


def _unit_box(x):
    lo = x.min(axis=0)
    span = x.max(axis=0) - lo
    span[span == 0] = 1.0
    return lo, span


def refinement_path(points, params=MultiParams()):
    """Per-scale record of the multi-scale search (diagnostics and tests).

    Coordinates in the returned steps are those the search ran on, i.e.
    rescaled ones when ``params.rescale`` is set.
    """
    x = as_points(points)
    if params.rescale:
        lo, span = _unit_box(x)
        x = (x - lo) / span
    return list(_refine(x, params.b, params.kappa))


def multi_mode(points, params=MultiParams()):
    """Multi-scale mode estimate by recursive histogram refinement.

    Scales run s = 1, ..., s_max with widths b**-s; at each scale only the
    points within ``kappa`` bins (sup-norm on keys) of the fullest bin stay
    active. Returns the corner of the fullest bin at the last scale. When
    n < b**d the loop would be empty and a single pass at s = 1 is made.
    """
    x = as_points(points)
    if params.rescale:
        lo, span = _unit_box(x)
        x = (x - lo) / span
    for step in _refine(x, params.b, params.kappa):
        pass
    est = bin_origin(step.k_hat, step.width)
    if params.rescale:
        est = lo + est * span
    return est


def subsampled(estimator: Callable, points, k):
    """Apply ``estimator`` to the first ``k`` points only."""
    x = as_points(points)
    if not 1 <= k <= len(x):
        raise ValueError(f"subsample size must be in [1, {len(x)}], got {k}")
    return estimator(x[:k])
