"""Exception hierarchy shared across the package."""


class AnomattrError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(AnomattrError):
    """Malformed input file (CSV series, config, or synthesis spec)."""


class ConfigError(AnomattrError):
    """Invalid configuration or parameter combination."""


class EstimationError(AnomattrError):
    """Not enough usable data to estimate a statistical model."""


class ScoringError(AnomattrError):
    """An interval cannot be scored (too few usable rows on one side)."""


class NumericalError(AnomattrError):
    """A linear-algebra step failed beyond what regularization can repair."""
