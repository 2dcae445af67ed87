"""Experiment configuration files (TOML).

Grammar (all keys optional unless noted)::

    kind = "rate"            # required: rate | runtime | two-point | sublinear
    sizes = [1000, 10000, 100000, 1000000]   # required, strictly increasing
    reps = 200
    seed = 0
    t = 1.0                  # tail radius multiplier
    jitter = true            # random unit-cube translation of the density per trial
    timing_repeats = 1

    [density]                # required
    family = "power-peak"    # power-peak | f1 | f2
    d = 1                    # required
    beta = 2.0               # required
    h0 = 0.5                 # required
    peak_value = 1.0         # power-peak only
    mode = [0.3]             # power-peak only; scalar allowed when d = 1
    c0 = 1.0                 # power-peak only
    C0 = 1.0                 # power-peak only
    h = 0.1                  # f2 only, required there

    [estimator]
    algo = "mono"            # mono | multi
    h = 0.05                 # mono: fixed width; omit for c * n^(-1/(d+2 beta))
    c = 1.0
    beta = 2.0               # mono: exponent used by the width rule (default: density's)
    b = 2.0                  # multi
    kappa = 2                # multi
    rescale = false          # multi

    [sublinear]
    gamma = 0.5              # required for kind = "sublinear"

    [two_point]
    c = [0.5, 1.0, 2.0]      # required for kind = "two-point"; h = c n^(-1/(d+2 beta))
"""

import re
import sys
from dataclasses import dataclass

from .densities import PowerPeakDensity, TwoPointPair
from .errors import ConfigError
from .experiments import KINDS, EstimatorSpec, ExperimentConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

_TOP = {"kind", "sizes", "reps", "seed", "t", "jitter", "timing_repeats", "density", "estimator", "sublinear", "two_point"}
_DENSITY = {"family", "d", "beta", "h0", "peak_value", "mode", "c0", "C0", "h"}
_ESTIMATOR = {"algo", "h", "c", "beta", "b", "kappa", "rescale"}


@dataclass(frozen=True)
class ExperimentPlan:
    kind: str
    config: ExperimentConfig
    gamma: float = None
    cs: tuple = ()


class _Source:
    """Maps key paths back to line numbers for error messages."""

    def __init__(self, text, name):
        self.lines = text.splitlines()
        self.name = name

    def where(self, section, key=None):
        current = None
        for i, line in enumerate(self.lines, start=1):
            head = re.match(r"\s*\[\s*([A-Za-z0-9_-]+)\s*\]", line)
            if head:
                current = head.group(1)
                if key is None and current == section:
                    return i
                continue
            if key is not None and current == section and re.match(rf"\s*{re.escape(key)}\s*=", line):
                return i
        return None

    def error(self, msg, section=None, key=None):
        line = self.where(section, key)
        path = ".".join(p for p in (section, key) if p)
        loc = f"{self.name}:{line}: " if line else f"{self.name}: "
        return ConfigError(f"{loc}{path}: {msg}" if path else f"{loc}{msg}")


def _get(src, table, section, key, types, required=False, default=None):
    if key not in table:
        if required:
            raise src.error("missing required key", section, key)
        return default
    v = table[key]
    if isinstance(v, bool) and bool not in types:
        raise src.error(f"expected {'/'.join(t.__name__ for t in types)}, got bool", section, key)
    if not isinstance(v, types):
        raise src.error(f"expected {'/'.join(t.__name__ for t in types)}, got {type(v).__name__}", section, key)
    return v


def _unknown(src, table, allowed, section=None):
    for key in table:
        if key not in allowed:
            raise src.error(f"unknown key {key!r}", section, key if section else key)


def density_from_table(table, src):
    _unknown(src, table, _DENSITY, "density")
    family = _get(src, table, "density", "family", (str,), default="power-peak")
    d = _get(src, table, "density", "d", (int,), required=True)
    beta = float(_get(src, table, "density", "beta", (int, float), required=True))
    h0 = float(_get(src, table, "density", "h0", (int, float), required=True))
    try:
        if family == "power-peak":
            mode = _get(src, table, "density", "mode", (list, int, float), default=None)
            return PowerPeakDensity(
                d,
                beta,
                h0,
                mode=mode,
                peak_value=float(_get(src, table, "density", "peak_value", (int, float), default=1.0)),
                c0=float(_get(src, table, "density", "c0", (int, float), default=1.0)),
                C0=float(_get(src, table, "density", "C0", (int, float), default=1.0)),
            )
        extra = set(table) & {"peak_value", "mode", "c0", "C0"}
        if extra:
            raise src.error(f"key not allowed for family {family!r}", "density", sorted(extra)[0])
        if family == "f1":
            return TwoPointPair(d, beta, h0, h0).first
        if family == "f2":
            h = float(_get(src, table, "density", "h", (int, float), required=True))
            return TwoPointPair(d, beta, h0, h).second
    except (ValueError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise src.error(f"invalid density: {exc}", "density") from None
    raise src.error(f"unknown family {family!r}; expected power-peak, f1 or f2", "density", "family")


def estimator_from_table(table, src):
    _unknown(src, table, _ESTIMATOR, "estimator")
    kw = {}
    for key, types in (("algo", (str,)), ("h", (int, float)), ("c", (int, float)), ("beta", (int, float)),
                       ("b", (int, float)), ("kappa", (int,)), ("rescale", (bool,))):
        v = _get(src, table, "estimator", key, types)
        if v is not None:
            kw[key] = float(v) if key in ("h", "c", "beta", "b") else v
    try:
        return EstimatorSpec(**kw)
    except ConfigError as exc:
        raise src.error(str(exc), "estimator") from None


def parse_config(text, name="<config>"):
    src = _Source(text, name)
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{name}: {exc}") from None
    _unknown(src, raw, _TOP)
    kind = _get(src, raw, None, "kind", (str,), required=True)
    if kind not in KINDS:
        raise src.error(f"unknown experiment kind {kind!r}; valid kinds: {', '.join(KINDS)}", None, "kind")
    sizes = _get(src, raw, None, "sizes", (list,), required=True)
    if not all(isinstance(n, int) and not isinstance(n, bool) for n in sizes):
        raise src.error("sizes must be a list of integers", None, "sizes")
    if "density" not in raw:
        raise src.error("missing required section [density]")
    density = density_from_table(raw["density"], src)
    estimator = estimator_from_table(raw.get("estimator", {}), src)
    cfg = ExperimentConfig(
        density=density,
        estimator=estimator,
        sizes=tuple(sizes),
        reps=_get(src, raw, None, "reps", (int,), default=100),
        seed=_get(src, raw, None, "seed", (int,), default=0),
        t=float(_get(src, raw, None, "t", (int, float), default=1.0)),
        jitter=_get(src, raw, None, "jitter", (bool,), default=True),
        timing_repeats=_get(src, raw, None, "timing_repeats", (int,), default=1),
    )
    gamma, cs = None, ()
    if kind == "sublinear":
        sub = raw.get("sublinear", {})
        _unknown(src, sub, {"gamma"}, "sublinear")
        gamma = float(_get(src, sub, "sublinear", "gamma", (int, float), required=True))
        if not 0 < gamma <= 1:
            raise src.error("gamma must lie in (0, 1]", "sublinear", "gamma")
    if kind == "two-point":
        tp = raw.get("two_point", {})
        _unknown(src, tp, {"c"}, "two_point")
        cs = _get(src, tp, "two_point", "c", (list, int, float), required=True)
        cs = tuple(float(c) for c in (cs if isinstance(cs, list) else [cs]))
        if not cs or any(c <= 0 for c in cs):
            raise src.error("c values must be positive", "two_point", "c")
    try:
        cfg.validate(kind)
    except ConfigError as exc:
        raise ConfigError(f"{name}: {exc}") from None
    return ExperimentPlan(kind, cfg, gamma, cs)


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, str(path))
