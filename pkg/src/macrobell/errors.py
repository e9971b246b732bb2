"""Exception types shared across the library."""


class MacrobellError(Exception):
    """Base class for all library-specific errors."""


class TruncationError(MacrobellError):
    """A Fock-space cutoff discards more probability than the caller allows."""


class NegativeProbability(MacrobellError):
    """A computed probability is negative beyond roundoff tolerance.

    This signals a truncation or phase-convention bug rather than noise:
    small negative values (above -1e-10) are clipped silently, anything
    below that threshold raises.
    """


class NoViolation(MacrobellError):
    """A threshold search was asked to bracket a violation that is absent."""


class DegenerateDenominator(MacrobellError):
    """The Clauser-Horne denominator is numerically zero."""


class SingularCovariance(MacrobellError):
    """A covariance matrix lacks the positive variance needed for inference."""


class ConfigError(MacrobellError):
    """A run configuration failed schema validation or semantic checks."""
