"""Sparse bin counting and deterministic argmax-bin extraction.

Counting is linear in the number of points. When the occupied keys span a
box with at most a few cells per point, counts go through a dense
``bincount`` over the box; otherwise keys are hashed with
``pandas.factorize``. Both paths return the same histogram.
"""

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import DataError
from .lattice import as_points, bin_index

# Dense counting is used when the key bounding box has at most
# _DENSE_CELLS_PER_POINT * n + _DENSE_MIN_CELLS cells.
_DENSE_CELLS_PER_POINT = 4
_DENSE_MIN_CELLS = 4096
# build_histogram fuses binning and counting per block for grids this small.
_FUSED_MAX_CELLS = 1 << 13
_FUSED_BLOCK = 1 << 15


def _dense_counts(keys, lo, span):
    """Counts over the bounding box; codes are row-major, so code order is
    lexicographic key order."""
    codes = keys[:, 0] - lo[0]
    for j in range(1, keys.shape[1]):
        codes *= span[j]
        codes += keys[:, j] - lo[j]
    return _decode(np.bincount(codes), lo, span)


def _decode(counts, lo, span):
    """Occupied keys and counts from a row-major dense count array."""
    occupied = np.flatnonzero(counts)
    uniq = np.empty((occupied.size, len(span)), dtype=np.int64)
    rem = occupied.copy()
    for j in range(len(span) - 1, -1, -1):
        uniq[:, j] = rem % span[j] + lo[j]
        rem //= span[j]
    return uniq, counts[occupied]


def _hashed_counts(keys):
    # Factorize column by column; each combined code stays below n**2.
    codes, uniques = pd.factorize(keys[:, 0])
    for j in range(1, keys.shape[1]):
        col, col_uniques = pd.factorize(keys[:, j])
        codes, uniques = pd.factorize(codes * len(col_uniques) + col)
    counts = np.bincount(codes, minlength=len(uniques))
    rep = np.empty(len(uniques), dtype=np.int64)
    rep[codes] = np.arange(len(codes))
    return keys[rep], counts


def count_keys(keys, dense=None):
    """Distinct rows of an (n, d) int64 key array and their counts.

    ``dense`` forces a counting path; by default it is picked from the size
    of the key bounding box. Row order of the result is unspecified.
    """
    keys = np.asarray(keys, dtype=np.int64)
    lo = keys.min(axis=0)
    span = keys.max(axis=0) - lo + 1
    if dense is None:
        cells = 1
        for s in span.tolist():
            cells *= s
        dense = cells <= _DENSE_CELLS_PER_POINT * len(keys) + _DENSE_MIN_CELLS
    if dense:
        return _dense_counts(keys, lo, span)
    return _hashed_counts(keys)


@dataclass(frozen=True, eq=False)
class SparseHistogram:
    """Occupied bins at a fixed width.

    ``keys`` holds one row per occupied bin, ``values`` the matching counts
    (all >= 1). Rows are not sorted; use :func:`occupied_bins` for a
    deterministic listing.
    """

    width: float
    keys: np.ndarray
    values: np.ndarray

    @property
    def total(self):
        return int(self.values.sum())

    @property
    def dim(self):
        return self.keys.shape[1]

    @property
    def counts(self):
        """The histogram as a ``{key tuple: count}`` mapping."""
        return {tuple(k): int(c) for k, c in zip(self.keys.tolist(), self.values.tolist())}

    def __len__(self):
        return len(self.values)

    def merge(self, other):
        """Histogram of the union of both inputs (same width and dimension)."""
        if other.width != self.width or other.dim != self.dim:
            raise ValueError("can only merge histograms of equal width and dimension")
        keys = np.concatenate([self.keys, other.keys])
        values = np.concatenate([self.values, other.values])
        # A key present in both shards gets the sum of its counts.
        uniq, idx = np.unique(keys, axis=0, return_inverse=True)
        summed = np.bincount(idx.ravel(), weights=values, minlength=len(uniq))
        return SparseHistogram(self.width, uniq, summed.astype(np.int64))


def build_histogram(points, h):
    """Count the points falling in each bin of width ``h``."""
    x = as_points(points)
    h = float(h)
    n, d = x.shape
    # bin_index is monotone, so the key box follows from the coordinate range.
    lo = bin_index(x.min(axis=0), h)
    span = bin_index(x.max(axis=0), h) - lo + 1
    cells = 1
    for s in span.tolist():
        cells *= s
    if cells > _FUSED_MAX_CELLS:
        keys, values = count_keys(bin_index(x, h))
        return SparseHistogram(h, keys, values.astype(np.int64))
    # Small grid: bin and count block by block so keys never leave cache.
    counts = np.zeros(cells, dtype=np.int64)
    rows = max(1, _FUSED_BLOCK // d)
    for i in range(0, n, rows):
        k = bin_index(x[i : i + rows], h)
        codes = k[:, 0] - lo[0]
        for j in range(1, d):
            codes *= span[j]
            codes += k[:, j] - lo[j]
        counts += np.bincount(codes, minlength=cells)
    keys, values = _decode(counts, lo, span)
    return SparseHistogram(h, keys, values)


def argmax_keys(keys, values):
    """Row of ``keys`` with the largest value; ties go to the
    lexicographically smallest key."""
    top = values.max()
    cand = np.flatnonzero(values == top)
    if cand.size == 1:
        return keys[cand[0]].copy()
    sub = keys[cand]
    order = np.lexsort(sub.T[::-1])
    return sub[order[0]].copy()


def argmax_bin(hist):
    """Key of the fullest bin, lexicographically smallest among ties."""
    if len(hist) == 0:
        raise DataError("empty histogram")
    return argmax_keys(hist.keys, hist.values)


def occupied_bins(hist):
    """All ``(key tuple, count)`` pairs sorted lexicographically by key."""
    order = np.lexsort(hist.keys.T[::-1]) if len(hist) else []
    return [(tuple(hist.keys[i].tolist()), int(hist.values[i])) for i in order]
