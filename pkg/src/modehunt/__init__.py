"""Histogram-based estimation of the global mode of a density."""

__version__ = "0.1.0"

from .densities import (  # noqa: E402
    PerturbedDensity,
    PowerPeakDensity,
    TwoPointPair,
    check_envelope,
    chi_squared,
    normalize_radius,
    sample,
)
from .estimators import (  # noqa: E402
    MonoParams,
    MultiParams,
    max_scale,
    mono_mode,
    multi_mode,
    subsampled,
    theoretical_bandwidth,
)
from .histogram import SparseHistogram, argmax_bin, build_histogram, occupied_bins  # noqa: E402
from .lattice import bin_index, bin_origin, sup_dist  # noqa: E402

__all__ = [
    "MonoParams",
    "MultiParams",
    "PerturbedDensity",
    "PowerPeakDensity",
    "SparseHistogram",
    "TwoPointPair",
    "argmax_bin",
    "bin_index",
    "bin_origin",
    "build_histogram",
    "check_envelope",
    "chi_squared",
    "max_scale",
    "mono_mode",
    "multi_mode",
    "normalize_radius",
    "occupied_bins",
    "sample",
    "subsampled",
    "sup_dist",
    "theoretical_bandwidth",
]
