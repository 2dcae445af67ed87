"""Exception types shared across the package."""


class ModeHuntError(Exception):
    """Base class for errors raised by modehunt."""


class DataError(ModeHuntError, ValueError):
    """Input data is unusable: empty, ragged, non-numeric or non-finite."""


class ConfigError(ModeHuntError, ValueError):
    """An experiment configuration failed to parse or validate."""


class InvariantError(ModeHuntError, RuntimeError):
    """An internal invariant was violated. Always a bug."""


class FitError(ModeHuntError, ValueError):
    """A log-log slope fit cannot be computed from the given report."""
