"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI: ConfigError -> 2, the assumption
family (NoResonanceError, DegenerateError, AssumptionError) -> 3,
numerical failures (BlowUpError, CapError, SolvabilityError) -> 4.
"""


class RescapError(Exception):
    pass


class DomainError(RescapError, ValueError):
    """Input outside the mathematical domain of an operation."""


class ConfigError(RescapError, ValueError):
    """Invalid or unknown configuration keys/values."""


class NoResonanceError(RescapError):
    """The requested frequency ratio has no resonant amplitude."""


class DegenerateError(RescapError):
    """Equilibrium with vanishing slope: center-saddle bifurcation case."""


class AssumptionError(RescapError):
    """A structural hypothesis of the theory fails for this system."""


class UnsupportedOrderError(RescapError):
    """Requested expansion order outside the implemented range."""


class SolvabilityError(RescapError):
    """Right-hand side with nonzero mean passed to the homological solver."""


class CapError(RescapError):
    """Spectral mode or degree caps exceeded; result would be truncated."""


class BlowUpError(RescapError):
    """Non-finite state during time integration."""

    def __init__(self, message, exit_time=None):
        super().__init__(message)
        self.exit_time = exit_time
