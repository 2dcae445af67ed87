import numpy as np
import pytest
from scipy import stats

from modehunt.densities import (
    PowerPeakDensity,
    TwoPointPair,
    bin_mass,
    box_mass,
    check_envelope,
    chi_squared,
    eval_f2,
    eval_g,
    eval_power_peak,
    integral_g,
    normalize_radius,
    sample,
    tensor_integral_g,
    total_mass,
)
from modehunt.quadrature import box_integral, composite_rule, panel_edges


def test_radius_closed_form_example():
    # peak mass 0.75, tail mass (R - 0.5) * 0.5 must supply 0.25
    assert normalize_radius(1, 1.0, 0.5, 1.0) == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize(
    "d, beta, h0, peak", [(1, 2.0, 0.5, 1.0), (2, 1.0, 0.3, 1.0), (2, 2.0, 0.4, 1.5), (3, 1.5, 0.2, 1.0)]
)
def test_radius_matches_independent_radial_quadrature(d, beta, h0, peak):
    # Independent oracle: Gauss-Legendre on the radial mass with shell d 2^d s^(d-1).
    R = normalize_radius(d, beta, h0, peak)
    edge = peak - h0**beta
    nodes, weights = np.polynomial.legendre.leggauss(60)

    def radial(a, b, fn):
        s = 0.5 * (b - a) * nodes + 0.5 * (a + b)
        return 0.5 * (b - a) * np.sum(weights * fn(s) * d * 2.0**d * s ** (d - 1))

    mass = radial(0, h0, lambda s: peak - s**beta) + radial(h0, R, lambda s: edge * (R - s) / (R - h0))
    assert mass == pytest.approx(1.0, abs=1e-10)


def test_radius_errors():
    with pytest.raises(ValueError, match="peak region too heavy"):
        normalize_radius(1, 1.0, 0.5, 1.5)
    with pytest.raises(ValueError):
        normalize_radius(1, 1.0, 1.2)
    with pytest.raises(ValueError):
        normalize_radius(1, 1.0, 0.0)


DENSITIES_1D = [
    PowerPeakDensity(1, 2.0, 0.5, mode=0.3),
    PowerPeakDensity(1, 1.0, 0.5),
    PowerPeakDensity(1, 0.5, 0.2, peak_value=1.2),
    PowerPeakDensity(1, 2.0, 0.4, c0=0.5, C0=2.0),
    TwoPointPair(1, 1.0, 0.5, 0.1).second,
    TwoPointPair(1, 2.0, 0.5, 0.3).second,
]
DENSITIES_ND = [
    PowerPeakDensity(2, 2.0, 0.5, mode=(0.1, -0.2)),
    PowerPeakDensity(2, 1.0, 0.3, c0=0.5, C0=1.5),
    PowerPeakDensity(3, 2.0, 0.4),
    TwoPointPair(2, 1.0, 0.5, 0.2).second,
    TwoPointPair(3, 1.0, 0.4, 0.2).second,
]


@pytest.mark.parametrize("f", DENSITIES_1D)
def test_total_mass_1d(f):
    assert total_mass(f) == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("f", DENSITIES_ND)
def test_total_mass_nd(f):
    assert total_mass(f) == pytest.approx(1.0, abs=1e-3)


def test_power_peak_values():
    f = PowerPeakDensity(2, 1.5, 0.4, mode=(0.2, 0.1), peak_value=1.3)
    assert eval_power_peak(f, f.mode) == 1.3
    x0 = np.array(f.mode)
    inner = f.pdf(x0 + [0.4 * (1 - 1e-12), 0.0])
    outer = f.pdf(x0 + [0.4 * (1 + 1e-12), 0.0])
    assert inner == pytest.approx(1.3 - 0.4**1.5, abs=1e-9)
    assert outer == pytest.approx(1.3 - 0.4**1.5, abs=1e-9)
    assert f.pdf(x0 + [f.R, 0.0]) == 0.0
    assert f.pdf(x0 + [0.0, -2 * f.R]) == 0.0
    assert np.all(f.pdf(np.random.default_rng(0).normal(size=(1000, 2))) >= 0)


def test_f2_examples():
    p = TwoPointPair(1, 1.0, 0.5, 0.1)
    assert eval_f2(p, 0.05) == pytest.approx(1.1, abs=1e-15)
    assert eval_f2(p, -0.05) == pytest.approx(0.9, abs=1e-15)
    # 1 + 0.1 - 4 * |0.02 - 0.05|
    assert eval_f2(p, 0.02) == pytest.approx(0.98, abs=1e-15)


def test_f2_boundaries_take_outer_branch():
    p = TwoPointPair(1, 1.0, 0.5, 0.1)
    assert eval_f2(p, 0.0) == pytest.approx(0.9)
    assert eval_f2(p, 0.1) == pytest.approx(p.f1(0.1))
    assert eval_f2(p, -0.1) == pytest.approx(p.f1(-0.1))


@pytest.mark.parametrize("d, beta, h", [(1, 1.0, 0.1), (2, 2.0, 0.2), (3, 0.5, 0.05)])
def test_g_values(d, beta, h):
    p = TwoPointPair(d, beta, 0.5, h)
    assert eval_g(p, np.full(d, 1.5 * h)) == 0.0
    assert eval_g(p, np.full(d, -h)) == 0.0
    # At the bump centre g = f2 - f1 = (2^d - 1) h^beta + (h/2)^beta.
    assert eval_g(p, np.full(d, h / 2)) == pytest.approx((2**d - 1) * h**beta + (h / 2) ** beta, rel=1e-12)


@pytest.mark.parametrize("d, beta, h", [(1, 1.0, 0.1), (1, 2.0, 0.3), (2, 1.0, 0.2), (2, 0.7, 0.05), (3, 1.0, 0.1)])
def test_g_integrates_to_zero(d, beta, h):
    assert abs(integral_g(TwoPointPair(d, beta, 0.5, h))) < 1e-8


@pytest.mark.parametrize("d, beta, h, tol", [(1, 1.0, 0.1, 1e-10), (1, 2.5, 0.3, 1e-10), (2, 1.0, 0.2, 1e-5)])
def test_g_tensor_quadrature_agrees(d, beta, h, tol):
    # Evaluates eval_g itself; panels are exact in 1-d, kinks limit d = 2.
    pair = TwoPointPair(d, beta, 0.5, h)
    scale = (2 * h) ** d * h**beta
    assert abs(tensor_integral_g(pair) - integral_g(pair)) < tol * scale


@pytest.mark.parametrize("d", [1, 2, 3])
def test_pointwise_identity(d):
    p = TwoPointPair(d, 1.3, 0.5, 0.2)
    x = np.random.default_rng(d).uniform(-0.3, 0.3, size=(10_000, d))
    assert np.max(np.abs(p.f2(x) - (p.f1(x) + p.g(x)))) <= 1e-12


@pytest.mark.parametrize("d", [1, 2])
def test_f2_maximizer_near_bump_centre(d):
    p = TwoPointPair(d, 1.0, 0.5, 0.2)
    m = 2001 if d == 1 else 401
    axis = np.linspace(-0.5, 0.5, m)
    grid = np.stack(np.meshgrid(*[axis] * d, indexing="ij"), -1).reshape(-1, d)
    best = grid[np.argmax(p.f2(grid))]
    assert np.max(np.abs(best - 0.1)) <= axis[1] - axis[0]


def test_pair_validation():
    with pytest.raises(ValueError):
        TwoPointPair(1, 1.0, 0.5, 0.6)
    with pytest.raises(ValueError):
        TwoPointPair(1, 1.0, 0.5, 0.0)


def test_chi_squared_bound():
    hs = [0.2, 0.1, 0.05, 0.025]
    ratios = [chi_squared(TwoPointPair(1, 1.0, 0.5, h)) / h**3 for h in hs]
    assert all(r <= 2 ** (2 * (1 + 1 + 3)) / (1 - 0.5) for r in ratios)
    assert max(ratios) / min(ratios) < 1.5


def test_chi_squared_vanishes_and_matches_direct_form():
    vals = [chi_squared(TwoPointPair(2, 1.0, 0.5, h)) for h in (0.2, 0.1, 0.05, 0.01)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1e-3 * vals[0]
    # f2^2 / f1 - 1 integrated over the support agrees with the g^2/f1 form.
    p = TwoPointPair(1, 1.0, 0.5, 0.2)
    edges = [panel_edges([-1.0, -0.5, -0.2, 0.0, 0.1, 0.2, 0.5, 1.0], 16)]
    direct = box_integral(lambda x: p.f2(x) ** 2 / np.maximum(p.f1(x), 1e-300) * (p.f1(x) > 0), edges, 12) - 1
    assert direct == pytest.approx(chi_squared(p), abs=1e-9)


def test_quadrature_rule_exact_on_polynomials():
    x, w = composite_rule(panel_edges([0.0, 0.3, 1.0], 3), 6)
    assert np.sum(w * x**11) == pytest.approx(1 / 12, rel=1e-13)


@pytest.mark.parametrize("f", [DENSITIES_1D[0], DENSITIES_1D[4], DENSITIES_ND[0], DENSITIES_ND[3]])
def test_sampler_support_and_determinism(f):
    a = sample(f, 2000, 5)
    b = f.sample(2000, 5)
    assert a.shape == (2000, f.d)
    assert np.array_equal(a, b)
    lo, hi = f.support_box()
    assert np.all((a >= lo) & (a <= hi))


@pytest.mark.parametrize(
    "f, h",
    [
        (PowerPeakDensity(1, 2.0, 0.5, mode=0.3), 0.25),
        (PowerPeakDensity(2, 1.0, 0.5, c0=0.5, C0=1.5), 0.4),
        (TwoPointPair(1, 1.0, 0.5, 0.2).second, 0.1),
        (TwoPointPair(2, 1.0, 0.5, 0.2).second, 0.25),
    ],
)
def test_sampler_bin_frequencies(f, h):
    n = 100_000
    x = sample(f, n, 123)
    keys, counts = np.unique(np.floor(x / h).astype(np.int64), axis=0, return_counts=True)
    lo, hi = f.support_box()
    kl, kh = np.floor(lo / h).astype(int), np.floor(hi / h).astype(int)
    grid = np.stack(np.meshgrid(*[np.arange(a, b + 1) for a, b in zip(kl, kh)], indexing="ij"), -1).reshape(-1, f.d)
    observed = {tuple(k): c for k, c in zip(keys.tolist(), counts.tolist())}
    total = 0.0
    for k in grid:
        p = bin_mass(f, k, h)
        total += p
        freq = observed.get(tuple(k.tolist()), 0) / n
        se = np.sqrt(max(p * (1 - p), 1e-12) / n)
        assert abs(freq - p) <= 4 * se, (k, freq, p)
    assert total == pytest.approx(1.0, abs=1e-3)


@pytest.mark.parametrize(
    "f",
    [
        PowerPeakDensity(1, 2.0, 0.5, mode=0.3),
        PowerPeakDensity(1, 1.0, 0.4, c0=0.5, C0=2.0),
        TwoPointPair(1, 1.0, 0.5, 0.2).second,
        PowerPeakDensity(2, 1.5, 0.5, mode=(0.2, -0.1)),
        TwoPointPair(2, 2.0, 0.5, 0.3).second,
    ],
)
def test_sampler_marginal_ks(f):
    n = 100_000
    x = sample(f, n, 2024)
    lo, hi = f.support_box()
    for j in range(f.d):
        cuts = np.linspace(lo[j], hi[j], 201)
        slab_lo, slab_hi = lo.copy(), hi.copy()
        masses = []
        for a, b in zip(cuts[:-1], cuts[1:]):
            slab_lo[j], slab_hi[j] = a, b
            masses.append(box_mass(f, slab_lo, slab_hi))
        cdf_vals = np.concatenate([[0.0], np.cumsum(masses)])
        cdf_vals /= cdf_vals[-1]
        res = stats.kstest(x[:, j], lambda u: np.interp(u, cuts, cdf_vals))
        assert res.pvalue > 1e-3, (j, res)


@pytest.mark.parametrize(
    "f",
    [
        PowerPeakDensity(1, 2.0, 0.5, mode=0.3),
        PowerPeakDensity(2, 1.0, 0.5),
        PowerPeakDensity(3, 2.0, 0.3, mode=(0.1, 0.2, 0.3)),
    ],
)
def test_envelope_exact_power_peak(f):
    rep = check_envelope(f)
    assert rep.passed
    assert rep.worst_violation == 0.0


@pytest.mark.parametrize("f", [PowerPeakDensity(1, 1.0, 0.4, c0=0.5, C0=2.0), PowerPeakDensity(2, 2.0, 0.4, c0=0.3, C0=1.0)])
def test_envelope_wobble(f):
    assert check_envelope(f).passed


@pytest.mark.parametrize("d, beta, h", [(1, 1.0, 0.1), (1, 2.0, 0.4), (2, 1.0, 0.2), (3, 0.5, 0.1)])
def test_envelope_f2_declared_constants(d, beta, h):
    f = TwoPointPair(d, beta, 0.5, h).second
    assert f.c0 == 2.0**-beta and f.C0 == 2.0 ** (d + beta)
    assert check_envelope(f).passed


def test_envelope_negative_control():
    f = PowerPeakDensity(1, 2.0, 0.5)
    flattened = lambda x: np.minimum(f.pdf(x), 0.99)  # noqa: E731
    rep = check_envelope(f, pdf=flattened)
    assert not rep.passed
    assert rep.worst_violation > 0
