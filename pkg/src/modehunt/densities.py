"""Synthetic densities with a known global mode.

``PowerPeakDensity`` equals ``peak - phi(r) * r**beta`` within sup-norm
radius ``h0`` of the mode, decays linearly to zero at radius ``R`` and
vanishes beyond. ``phi`` is the constant 1 by default; giving ``c0 < C0``
switches it to a log-periodic wobble that oscillates inside [c0, C0].

``TwoPointPair`` is a base density ``f1`` (mode at the origin, peak 1) and
a perturbation ``f2 = f1 + g`` whose mode sits at ``(h/2, ..., h/2)``.
"""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .quadrature import box_integral, panel_edges


def _shell(d):
    """Surface measure of the sup-norm sphere of radius s: d 2^d s^(d-1)."""
    return lambda s: d * 2.0**d * s ** (d - 1)


def _deviation(r, beta, c0, C0):
    """phi(r) * r**beta for the radial profile inside the peak region."""
    r = np.asarray(r, dtype=np.float64)
    if c0 == C0:
        return c0 * r**beta
    mid, amp = 0.5 * (c0 + C0), 0.5 * (C0 - c0)
    # omega keeps phi(r) r^beta strictly increasing in r.
    omega = beta * c0 / (C0 - c0)
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = mid + amp * np.sin(omega * np.log(r))
    return np.where(r > 0, phi * r**beta, 0.0)


def _peak_mass(d, beta, h0, peak_value, c0, C0):
    if c0 == C0:
        # closed form: p (2 h0)^d - c0 2^d d h0^(d+beta) / (d+beta)
        return peak_value * (2 * h0) ** d - c0 * 2.0**d * d * h0 ** (d + beta) / (d + beta)
    shell = _shell(d)
    val, _ = quad(lambda s: (peak_value - _deviation(s, beta, c0, C0)) * shell(s), 0.0, h0, limit=200)
    return val


def normalize_radius(d, beta, h0, peak_value=1.0, c0=1.0, C0=1.0):
    """Outer radius R at which the piecewise profile has unit mass."""
    if not 0 < h0 < 1:
        raise ValueError(f"h0 must lie in (0, 1), got {h0!r}")
    if not (beta > 0 and d >= 1 and 0 < c0 <= C0):
        raise ValueError("need beta > 0, d >= 1 and 0 < c0 <= C0")
    edge = peak_value - float(_deviation(h0, beta, c0, C0))
    if peak_value - C0 * h0**beta <= 0:
        raise ValueError("peak_value must exceed C0 * h0**beta so the profile stays positive")
    peak = _peak_mass(d, beta, h0, peak_value, c0, C0)
    if peak >= 1:
        raise ValueError(f"peak region too heavy; shrink h0 or peak_value (mass {peak:.6g})")
    rest = 1.0 - peak
    if d == 1:
        # two linear ramps of height `edge` and run R - h0
        return h0 + rest / edge
    shell = _shell(d)

    def tail(R):
        val, _ = quad(lambda s: edge * (R - s) / (R - h0) * shell(s), h0, R)
        return val - rest

    hi = h0 + 1.0
    while tail(hi) < 0:
        hi = h0 + 2 * (hi - h0)
    return brentq(tail, h0 + 1e-15, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps)


def _points(x, d):
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim <= 1
    x = x.reshape(-1, d)
    return x, single


@dataclass(frozen=True)
class PowerPeakDensity:
    d: int
    beta: float
    h0: float
    mode: tuple = None
    peak_value: float = 1.0
    c0: float = 1.0
    C0: float = 1.0
    R: float = field(init=False)

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.d!r}")
        mode = (0.0,) * self.d if self.mode is None else tuple(float(m) for m in np.atleast_1d(self.mode))
        if len(mode) != self.d:
            raise ValueError(f"mode has {len(mode)} coordinates, expected {self.d}")
        object.__setattr__(self, "mode", mode)
        R = normalize_radius(self.d, self.beta, self.h0, self.peak_value, self.c0, self.C0)
        object.__setattr__(self, "R", R)

    @property
    def max_value(self):
        return self.peak_value

    @property
    def edge_value(self):
        """Density value at sup-norm radius h0 (start of the linear tail)."""
        return self.peak_value - float(_deviation(self.h0, self.beta, self.c0, self.C0))

    def support_box(self):
        x0 = np.array(self.mode)
        return x0 - self.R, x0 + self.R

    def breakpoints(self):
        """Per-axis coordinates where the profile changes branch."""
        offs = np.array([-self.R, -self.h0, 0.0, self.h0, self.R])
        return [m + offs for m in self.mode]

    def radial(self, r):
        r = np.asarray(r, dtype=np.float64)
        ramp = self.edge_value * (self.R - r) / (self.R - self.h0)
        inner = self.peak_value - _deviation(np.minimum(r, self.h0), self.beta, self.c0, self.C0)
        return np.where(r <= self.h0, inner, np.where(r < self.R, ramp, 0.0))

    def pdf(self, x):
        x, single = _points(x, self.d)
        v = self.radial(np.max(np.abs(x - np.array(self.mode)), axis=1))
        return float(v[0]) if single else v

    def sample(self, n, seed=None):
        return sample(self, n, seed)


def eval_power_peak(f, x):
    return f.pdf(x)


@dataclass(frozen=True)
class TwoPointPair:
    d: int
    beta: float
    h0: float
    h: float
    base: PowerPeakDensity = field(init=False)

    def __post_init__(self):
        if not 0 < self.h <= self.h0:
            raise ValueError(f"perturbation width must lie in (0, h0], got h={self.h!r}")
        object.__setattr__(self, "base", PowerPeakDensity(self.d, self.beta, self.h0))

    @property
    def bump_height(self):
        """f2 at its mode: 1 + (2^d - 1) h^beta."""
        return 1.0 + (2**self.d - 1) * self.h**self.beta

    def _branches(self, x):
        h = self.h
        outer = np.all(np.abs(x) < h, axis=1)
        inner = np.all((x > 0) & (x < h), axis=1)
        return outer & ~inner, inner

    def _bump(self, x):
        r = np.max(np.abs(x - self.h / 2), axis=1)
        return self.bump_height - 2.0 ** (self.d + self.beta) * r**self.beta

    def f1(self, t):
        return self.base.pdf(t)

    def f2(self, t):
        x, single = _points(t, self.d)
        middle, inner = self._branches(x)
        v = self.base.pdf(x)
        v = np.where(middle, 1.0 - self.h**self.beta, v)
        v = np.where(inner, self._bump(x), v)
        return float(v[0]) if single else v

    def g(self, t):
        """f2 - f1, written out branch by branch."""
        x, single = _points(t, self.d)
        middle, inner = self._branches(x)
        rb = np.max(np.abs(x), axis=1) ** self.beta
        v = np.zeros(len(x))
        v = np.where(middle, rb - self.h**self.beta, v)
        v = np.where(inner, rb + self._bump(x) - 1.0, v)
        return float(v[0]) if single else v

    @property
    def first(self):
        return self.base

    @property
    def second(self):
        return PerturbedDensity(self)


def eval_f2(pair, t):
    return pair.f2(t)


def eval_g(pair, t):
    return pair.g(t)


@dataclass(frozen=True)
class PerturbedDensity:
    """The density f2 of a :class:`TwoPointPair`, with its declared
    envelope constants (c0 = 2^-beta, C0 = 2^(d+beta), radius h0 - h/2)."""

    pair: TwoPointPair

    @property
    def d(self):
        return self.pair.d

    @property
    def beta(self):
        return self.pair.beta

    @property
    def mode(self):
        return (self.pair.h / 2,) * self.pair.d

    @property
    def peak_value(self):
        return self.pair.bump_height

    max_value = peak_value

    @property
    def c0(self):
        return 2.0 ** (-self.pair.beta)

    @property
    def C0(self):
        return 2.0 ** (self.pair.d + self.pair.beta)

    @property
    def h0(self):
        return self.pair.h0 - self.pair.h / 2

    def support_box(self):
        return self.pair.base.support_box()

    def breakpoints(self):
        p = self.pair
        offs = [-p.base.R, -p.h0, -p.h, 0.0, p.h / 2, p.h, p.h0, p.base.R]
        return [np.array(offs)] * p.d

    def pdf(self, x):
        return self.pair.f2(x)

    def sample(self, n, seed=None):
        return sample(self, n, seed)


def sample(f, n, seed=None):
    """n iid draws from ``f`` by rejection from the uniform box envelope.

    The envelope height is ``f.max_value``; the expected number of
    proposals per draw is that height times the box volume.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    lo, hi = f.support_box()
    width = hi - lo
    top = f.max_value
    ratio = top * float(np.prod(width))
    out, got = [], 0
    while got < n:
        m = min(int((n - got) * ratio * 1.05) + 64, 1 << 22)
        prop = lo + width * rng.random((m, f.d))
        u = top * rng.random(m)
        acc = prop[u < f.pdf(prop)]
        out.append(acc)
        got += len(acc)
    return np.concatenate(out)[:n]


def box_mass(f, lo, hi, per_interval=4, order=10):
    """Integral of ``f`` over the box [lo, hi] with branch-aligned panels."""
    lo, hi = np.atleast_1d(lo).astype(float), np.atleast_1d(hi).astype(float)
    edges = []
    for j, bp in enumerate(f.breakpoints()):
        inside = bp[(bp > lo[j]) & (bp < hi[j])]
        edges.append(panel_edges(np.concatenate([[lo[j], hi[j]], inside]), per_interval))
    return box_integral(f.pdf, edges, order)


def total_mass(f, per_interval=None, order=10):
    """Mass of ``f`` over its support box."""
    if per_interval is None:
        per_interval = {1: 16, 2: 12, 3: 6}.get(f.d, 4)
    lo, hi = f.support_box()
    return box_mass(f, lo, hi, per_interval, order)


def bin_mass(f, k, h, per_interval=4, order=10):
    """Probability p_k that one draw from ``f`` falls in bin ``k`` of width ``h``."""
    k = np.atleast_1d(np.asarray(k, dtype=np.int64))
    return box_mass(f, k * h, (k + 1) * h, per_interval, order)


def integral_g(pair):
    """Integral of g over (-h, h)^d; zero when f2 is a density.

    g is (|t|^beta - h^beta) on (-h, h)^d plus (2^d h^beta - 2^(d+beta)
    |t - h/2|^beta) on (0, h)^d, both radial in the sup-norm about the
    centre of their cube, so each piece is a 1-d shell integral. (Tensor
    panels cannot follow the diagonal kinks for d >= 2.)
    """
    d, beta, h = pair.d, pair.beta, pair.h
    shell = _shell(d)
    outer, _ = quad(lambda s: (s**beta - h**beta) * shell(s), 0.0, h, epsabs=1e-15, epsrel=1e-13)
    inner, _ = quad(
        lambda s: (2.0**d * h**beta - 2.0 ** (d + beta) * s**beta) * shell(s), 0.0, h / 2, epsabs=1e-15, epsrel=1e-13
    )
    return outer + inner


def tensor_integral_g(pair, per_interval=8, order=12):
    """Integral of g by tensor quadrature of ``pair.g`` (exact panels only in 1-d)."""
    edges = [panel_edges([-pair.h, 0.0, pair.h / 2, pair.h], per_interval)] * pair.d
    return box_integral(pair.g, edges, order)


def chi_squared(pair, per_interval=8, order=12):
    """Chi-squared divergence of f2 from f1, integrated as g^2/f1 on (-h, h)^d."""
    if pair.h > pair.h0:
        raise ValueError("chi-squared requires h <= h0")
    edges = [panel_edges([-pair.h, 0.0, pair.h / 2, pair.h], per_interval)] * pair.d
    return box_integral(lambda x: pair.g(x) ** 2 / pair.f1(x), edges, order)


class EnvelopeReport(NamedTuple):
    passed: bool
    worst_violation: float
    worst_point: tuple
    n_points: int


def check_envelope(f, resolution=None, n_random=10_000, seed=0, pdf=None, atol=1e-12):
    """Check the power-type envelope around the declared mode.

    Within sup-norm radius ``f.h0`` of ``f.mode`` the density must lie
    between ``peak - C0 r^beta`` and ``peak - c0 r^beta``; outside it must
    not exceed ``peak - c0 h0^beta``. The density is evaluated on a regular
    grid over the support box plus ``n_random`` seeded points (half of them
    inside the declared radius). ``pdf`` overrides ``f.pdf``, which is how
    negative controls are run.
    """
    pdf = f.pdf if pdf is None else pdf
    d = f.d
    if resolution is None:
        resolution = {1: 20001, 2: 401}.get(d, 41)
    lo, hi = f.support_box()
    axes = [np.linspace(lo[j], hi[j], resolution) for j in range(d)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    rng = np.random.default_rng(seed)
    x0 = np.array(f.mode)
    near = x0 + f.h0 * (2 * rng.random((n_random // 2, d)) - 1)
    far = lo + (hi - lo) * rng.random((n_random - n_random // 2, d))
    x = np.concatenate([grid, near, far, x0[None, :]])

    vals = np.asarray(pdf(x), dtype=np.float64)
    r = np.max(np.abs(x - x0), axis=1)
    inside = r <= f.h0
    top = f.peak_value
    viol = np.where(
        inside,
        np.maximum(top - f.C0 * r**f.beta - vals, vals - (top - f.c0 * r**f.beta)),
        vals - (top - f.c0 * f.h0**f.beta),
    )
    i = int(np.argmax(viol))
    worst = max(float(viol[i]), 0.0)
    return EnvelopeReport(worst <= atol, worst, tuple(x[i].tolist()), len(x))
