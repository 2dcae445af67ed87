"""Composite Gauss-Legendre quadrature on boxes with aligned panel edges."""

import numpy as np
from numpy.polynomial.legendre import leggauss


def panel_edges(breaks, per_interval=1):
    """Sorted unique ``breaks`` with each gap split into ``per_interval`` panels."""
    b = np.unique(np.asarray(breaks, dtype=np.float64))
    if per_interval <= 1:
        return b
    t = np.linspace(0.0, 1.0, per_interval + 1)[:-1]
    inner = (b[:-1, None] + np.diff(b)[:, None] * t).ravel()
    return np.append(inner, b[-1])


def composite_rule(edges, order=10):
    """Nodes and weights of a composite Gauss-Legendre rule on ``edges``."""
    edges = np.asarray(edges, dtype=np.float64)
    z, w = leggauss(order)
    lo, hi = edges[:-1, None], edges[1:, None]
    half = 0.5 * (hi - lo)
    nodes = (lo + half * (z + 1.0)).ravel()
    weights = (half * w).ravel()
    return nodes, weights


def box_integral(func, edges, order=10, chunk=1 << 18):
    """Integrate ``func`` over the box spanned by per-axis panel ``edges``.

    ``func`` maps an (m, d) array of points to m values. The tensor grid is
    evaluated in slabs along the first axis to bound memory.
    """
    rules = [composite_rule(e, order) for e in edges]
    d = len(rules)
    if d == 1:
        x, w = rules[0]
        return float(np.dot(func(x[:, None]), w))
    rest_nodes = np.stack(np.meshgrid(*[r[0] for r in rules[1:]], indexing="ij"), axis=-1).reshape(-1, d - 1)
    rest_w = np.ones(1)
    for _, w in rules[1:]:
        rest_w = np.multiply.outer(rest_w, w).ravel()
    x0, w0 = rules[0]
    step = max(1, chunk // len(rest_w))
    total = 0.0
    for i in range(0, len(x0), step):
        xs = x0[i : i + step]
        pts = np.empty((len(xs), len(rest_w), d))
        pts[:, :, 0] = xs[:, None]
        pts[:, :, 1:] = rest_nodes[None, :, :]
        vals = func(pts.reshape(-1, d)).reshape(len(xs), len(rest_w))
        total += float(w0[i : i + step] @ (vals @ rest_w))
    return total
