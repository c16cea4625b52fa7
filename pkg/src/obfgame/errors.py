"""Semantic exceptions shared across the package."""

from __future__ import annotations


class ObfGameError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(ObfGameError):
    """Malformed or incomplete run configuration (CLI exit status 2)."""


class UndefinedThresholdError(ObfGameError):
    """The deterrence threshold is undefined because users are never deterred
    (privacy loss does not exceed the obfuscation cost)."""


class NoCrossingError(ObfGameError):
    """No sign change of pressure minus abstain-value was found on (0, M].

    ``dominant`` names the side that dominates throughout: "pressure" when
    users always prefer obfuscating, "abstain" when they never do.
    """

    def __init__(self, message: str, dominant: str):
        super().__init__(message)
        self.dominant = dominant


class InconsistencyError(ObfGameError):
    """Closed-form equilibrium disagrees with the grid-scan verification.

    Carries both candidate optima so callers can diagnose convention
    mismatches between the threshold formulas and the configured model.
    """

    def __init__(self, message: str, closed_form: tuple[float, float],
                 scanned: tuple[float, float]):
        super().__init__(message)
        self.closed_form = closed_form  # (sigma_L, utility)
        self.scanned = scanned          # (sigma_L, utility)


class InfiniteLeakageError(ObfGameError):
    """A differential-privacy level was requested for zero total noise."""


class DegenerateRegressionError(ObfGameError):
    """The scaling regression has no spread in its explanatory variable."""
