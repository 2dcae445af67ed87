"""Monte Carlo harness: error-rate sweeps, runtime scaling, the two-point
test and the subsampling demonstration.

Every trial (n, rep) gets its own generator seeded from
``SeedSequence(seed, spawn_key=(n, rep))``, so results do not depend on the
order in which trials run or on how they are split across workers.
"""

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, is_dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy import stats

from . import __version__
from .densities import PerturbedDensity, PowerPeakDensity, TwoPointPair, chi_squared, sample
from .errors import ConfigError, FitError
from .estimators import MultiParams, mono_mode, multi_mode, subsampled, theoretical_bandwidth

KINDS = ("rate", "runtime", "two-point", "sublinear")


@dataclass(frozen=True)
class EstimatorSpec:
    """Which estimator to run and how to tune it.

    For ``algo="mono"`` a fixed ``h`` may be given; otherwise the width is
    ``c * m**(-1/(d + 2*beta))`` for a sample of size m, with ``beta``
    defaulting to the density's exponent.
    """

    algo: str = "mono"
    h: float = None
    c: float = 1.0
    beta: float = None
    b: float = 2.0
    kappa: int = 2
    rescale: bool = False

    def __post_init__(self):
        if self.algo not in ("mono", "multi"):
            raise ConfigError(f"unknown estimator {self.algo!r}; expected 'mono' or 'multi'")
        if self.h is not None and not self.h > 0:
            raise ConfigError("estimator.h must be positive")
        if not self.c > 0:
            raise ConfigError("estimator.c must be positive")
        if self.algo == "multi":
            try:
                MultiParams(self.b, self.kappa, self.rescale)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None

    def build(self, d, beta):
        if self.algo == "multi":
            return MultiEstimator(MultiParams(self.b, self.kappa, self.rescale))
        return MonoEstimator(self.h, self.c, d, self.beta if self.beta is not None else beta)


@dataclass(frozen=True)
class MonoEstimator:
    h: float
    c: float
    d: int
    beta: float

    def __call__(self, points):
        h = self.h if self.h is not None else theoretical_bandwidth(len(points), self.d, self.beta, self.c)
        return mono_mode(points, h)


@dataclass(frozen=True)
class MultiEstimator:
    params: MultiParams

    def __call__(self, points):
        return multi_mode(points, self.params)


def subsample_size(n, gamma):
    # The tiny inflation keeps exact powers (e.g. 10**6 ** 0.5) from flooring down.
    return max(1, min(n, int(math.floor(n**gamma * (1 + 1e-12)))))


@dataclass(frozen=True)
class PrefixEstimator:
    """Runs ``inner`` on the first floor(n**gamma) points."""

    inner: Callable
    gamma: float

    def __call__(self, points):
        return subsampled(self.inner, points, subsample_size(len(points), self.gamma))


@dataclass(frozen=True)
class ExperimentConfig:
    density: object
    estimator: object = EstimatorSpec()
    sizes: tuple = ()
    reps: int = 100
    seed: int = 0
    t: float = 1.0
    jitter: bool = True
    timing_repeats: int = 1

    @property
    def rate_exponent(self):
        return 1.0 / (self.density.d + 2.0 * self.density.beta)

    def estimator_fn(self):
        if isinstance(self.estimator, EstimatorSpec):
            return self.estimator.build(self.density.d, self.density.beta)
        return self.estimator

    def validate(self, kind=None):
        """Raise :class:`ConfigError` on an unusable config.

        Without ``kind`` only basic sanity is checked. ``rate`` and
        ``sublinear`` sweeps need >= 4 sizes over >= 2 decades and >= 100
        reps; ``runtime`` sweeps need >= 4 sizes.
        """
        sizes = list(self.sizes)
        if not sizes:
            raise ConfigError("sizes must not be empty")
        if any(int(n) != n or n < 1 for n in sizes):
            raise ConfigError("sizes must be positive integers")
        if any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise ConfigError("sizes must be strictly increasing")
        if int(self.reps) != self.reps or self.reps < 1:
            raise ConfigError("reps must be >= 1")
        if not self.t > 0:
            raise ConfigError("t must be positive")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ConfigError("seed must be a nonnegative integer")
        if self.timing_repeats < 1:
            raise ConfigError("timing_repeats must be >= 1")
        if kind is None:
            return
        if kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {kind!r}; valid kinds: {', '.join(KINDS)}")
        if kind in ("rate", "sublinear", "runtime") and len(sizes) < 4:
            raise ConfigError("at least 4 sample sizes required")
        if kind in ("rate", "sublinear"):
            if sizes[-1] < 100 * sizes[0]:
                raise ConfigError("sample sizes must span at least 2 decades")
            if self.reps < 100:
                raise ConfigError("at least 100 reps required")

    def describe(self):
        def echo(obj):
            if isinstance(obj, PerturbedDensity):
                return {"family": "f2", **echo(obj.pair)}
            if is_dataclass(obj):
                out = {k: v for k, v in asdict(obj).items() if k != "base"}
                if isinstance(obj, PowerPeakDensity):
                    out["family"] = "power-peak"
                return out
            return repr(obj)

        return {
            "density": echo(self.density),
            "estimator": echo(self.estimator),
            "sizes": [int(n) for n in self.sizes],
            "reps": int(self.reps),
            "seed": int(self.seed),
            "t": float(self.t),
            "jitter": bool(self.jitter),
            "timing_repeats": int(self.timing_repeats),
        }


def trial_rng(seed, n, rep):
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(n), int(rep))))


def _run_trial(density, estimators, n, rep, seed, jitter, timing_repeats):
    rng = trial_rng(seed, n, rep)
    x = sample(density, n, rng)
    x0 = np.array(density.mode)
    if jitter:
        # A uniform translation over the unit cube randomizes how the mode
        # sits relative to every grid of width 1/integer.
        off = rng.random(density.d)
        x += off
        x0 = x0 + off
    out = []
    for est in estimators:
        times = []
        for _ in range(timing_repeats):
            t0 = time.perf_counter()
            xhat = est(x)
            times.append(time.perf_counter() - t0)
        err = float(np.max(np.abs(np.asarray(xhat, dtype=float) - x0)))
        out.append((err, float(np.median(times))))
    return out


def _run_chunk(args):
    density, estimators, tasks, seed, jitter, timing_repeats = args
    return [(n, rep, _run_trial(density, estimators, n, rep, seed, jitter, timing_repeats)) for n, rep in tasks]


def _collect(cfg, estimators, workers=1):
    """Errors and times with shape (len(estimators), len(sizes), reps)."""
    sizes = [int(n) for n in cfg.sizes]
    tasks = [(n, rep) for n in sizes for rep in range(cfg.reps)]
    errors = np.empty((len(estimators), len(sizes), cfg.reps))
    times = np.empty_like(errors)
    where = {n: i for i, n in enumerate(sizes)}

    common = (cfg.density, estimators)
    tail = (cfg.seed, cfg.jitter, cfg.timing_repeats)
    if workers and workers > 1:
        chunks = [tasks[i :: workers * 4] for i in range(workers * 4)]
        with ProcessPoolExecutor(workers) as pool:
            results = [r for part in pool.map(_run_chunk, [common + (c,) + tail for c in chunks if c]) for r in part]
    else:
        results = _run_chunk(common + (tasks,) + tail)
    for n, rep, per_est in results:
        for e, (err, dt) in enumerate(per_est):
            errors[e, where[n], rep] = err
            times[e, where[n], rep] = dt
    return errors, times


@dataclass
class ExperimentReport:
    """Per-(n, rep) sup-norm errors and estimator wall times (seconds)."""

    sizes: np.ndarray
    errors: np.ndarray
    times: np.ndarray
    rate_exponent: float
    t: float
    metadata: dict

    @property
    def median_error(self):
        return np.median(self.errors, axis=1)

    @property
    def q90_error(self):
        return np.quantile(self.errors, 0.9, axis=1)

    @property
    def median_time(self):
        return np.median(self.times, axis=1)

    def tail_frequency(self, t=None):
        """Fraction of reps with error > t * n**(-1/(d+2 beta)), per n."""
        t = self.t if t is None else t
        radius = t * self.sizes.astype(float) ** (-self.rate_exponent)
        return np.mean(self.errors > radius[:, None], axis=1)

    def rows(self):
        """Flat table rows ``(n, rep, error, time)``."""
        for i, n in enumerate(self.sizes):
            for rep in range(self.errors.shape[1]):
                yield int(n), rep, float(self.errors[i, rep]), float(self.times[i, rep])

    def to_dict(self, timing=True):
        def sig(a):
            return [float(f"{v:.6g}") for v in np.atleast_1d(a)]

        out = {
            "metadata": self.metadata,
            "sizes": [int(n) for n in self.sizes],
            "rate_exponent": float(self.rate_exponent),
            "t": float(self.t),
            "median_error": sig(self.median_error),
            "q90_error": sig(self.q90_error),
            "tail_frequency": sig(self.tail_frequency()),
            "errors": self.errors.tolist(),
        }
        try:
            fit = fit_rate_slope(self)
            out["slope"] = {"value": float(f"{fit.slope:.6g}"), "stderr": float(f"{fit.stderr:.6g}")}
        except FitError as exc:
            out["slope"] = {"error": str(exc)}
        if timing:
            out["timing"] = {"median_time": sig(self.median_time), "times": self.times.tolist()}
        return out


def _report(cfg, errors, times, extra=None):
    meta = {"config": cfg.describe(), "version": __version__}
    if isinstance(cfg.estimator, EstimatorSpec) and cfg.estimator.algo == "multi" and cfg.estimator.rescale:
        meta["note"] = "multi-scale search ran on data rescaled to the unit cube"
    meta.update(extra or {})
    return ExperimentReport(np.array(cfg.sizes, dtype=np.int64), errors, times, cfg.rate_exponent, cfg.t, meta)


def run_trials(cfg, workers=1):
    """Draw a fresh sample per (n, rep), time the estimator call alone and
    record its sup-norm distance to the true mode."""
    cfg.validate()
    errors, times = _collect(cfg, [cfg.estimator_fn()], workers)
    return _report(cfg, errors[0], times[0])


def compare_estimators(cfg, estimators, workers=1):
    """Like :func:`run_trials` for several estimators evaluated on the very
    same draws; returns one report per estimator."""
    cfg.validate()
    fns = [e.build(cfg.density.d, cfg.density.beta) if isinstance(e, EstimatorSpec) else e for e in estimators]
    errors, times = _collect(cfg, fns, workers)
    out = []
    for i, est in enumerate(estimators):
        one = ExperimentConfig(**{**cfg.__dict__, "estimator": est})
        out.append(_report(one, errors[i], times[i]))
    return out


class SlopeFit(NamedTuple):
    slope: float
    stderr: float


def _loglog_fit(sizes, values, what):
    sizes = np.asarray(sizes, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(np.unique(sizes)) < 4:
        raise FitError("at least 4 sample sizes required for a slope fit")
    if np.any(values <= 0):
        raise FitError(f"degenerate: zero {what}; increase resolution or reduce c")
    res = stats.linregress(np.log(sizes), np.log(values))
    return SlopeFit(float(res.slope), float(res.stderr))


def fit_rate_slope(report):
    """OLS slope (and standard error) of log median error on log n."""
    return _loglog_fit(report.sizes, report.median_error, "median error")


def runtime_scaling(report):
    """OLS slope (and standard error) of log median wall time on log n."""
    return _loglog_fit(report.sizes, report.median_time, "median time")


def log_likelihood_ratio(pair, x):
    """log prod f2(x_i)/f1(x_i); only points in (-h, h)^d contribute."""
    x = np.asarray(x, dtype=float).reshape(-1, pair.d)
    sel = x[np.all(np.abs(x) < pair.h, axis=1)]
    if len(sel) == 0:
        return 0.0
    return float(np.sum(np.log(pair.f2(sel)) - np.log(pair.f1(sel))))


def two_point_experiment(pair, n, reps, seed=0):
    """Empirical error probability of the likelihood-ratio test between f1
    and f2 under a fair prior. Ties (ratio exactly 1) are decided for f1."""
    if reps < 1:
        raise ValueError("reps must be ≥ 1")
    wrong = 0
    for rep in range(reps):
        rng = trial_rng(seed, n, rep)
        truth = 2 if rng.random() < 0.5 else 1
        x = sample(pair.second if truth == 2 else pair.first, n, rng)
        decided = 2 if log_likelihood_ratio(pair, x) > 0 else 1
        wrong += decided != truth
    return wrong / reps


def two_point_sweep(d, beta, h0, sizes, cs, reps, seed=0):
    """Error probability of the optimal test over a grid of separation
    constants c, with h = c * n**(-1/(d + 2 beta))."""
    rows = []
    for c in cs:
        for n in sizes:
            h = theoretical_bandwidth(n, d, beta, c)
            if h > h0:
                raise ConfigError(f"c={c} gives h={h:.4g} > h0={h0} at n={n}")
            pair = TwoPointPair(d, beta, h0, h)
            rows.append(
                {
                    "c": float(c),
                    "n": int(n),
                    "h": h,
                    "n_chi2": n * chi_squared(pair),
                    "error": two_point_experiment(pair, n, reps, seed),
                }
            )
    return rows


@dataclass
class SublinearReport:
    gamma: float
    full: ExperimentReport
    sub: ExperimentReport

    @property
    def full_fit(self):
        return fit_rate_slope(self.full)

    @property
    def sub_fit(self):
        return fit_rate_slope(self.sub)

    @property
    def gap_z(self):
        """Slope difference in units of the combined standard error."""
        a, b = self.full_fit, self.sub_fit
        return abs(a.slope - b.slope) / math.hypot(a.stderr, b.stderr)


def sublinear_demo(cfg, gamma, workers=1):
    """Run the estimator on each full sample and on its first floor(n**gamma)
    points, from the same draws, and fit both rates."""
    if not 0 < gamma <= 1:
        raise ConfigError("gamma must lie in (0, 1]")
    cfg.validate()
    est = cfg.estimator_fn()
    errors, times = _collect(cfg, [est, PrefixEstimator(est, gamma)], workers)
    full = _report(cfg, errors[0], times[0], {"variant": "full"})
    sub = _report(cfg, errors[1], times[1], {"variant": "subsampled", "gamma": gamma})
    return SublinearReport(gamma, full, sub)
