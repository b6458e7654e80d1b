"""Exception hierarchy.

Configuration problems and numerical guards are kept apart so the CLI can
map them to distinct exit codes.
"""


class RelMeasError(Exception):
    """Base class for all library errors."""


class GridMismatchError(RelMeasError, ValueError):
    """Operands live on different lattices or different slices."""


class BandLimitError(RelMeasError, ValueError):
    """A state would carry non-negligible amplitude above the grid band limit."""


class OutcomeOrderError(RelMeasError, ValueError):
    """Measurement requested on a slice earlier than the state's slice."""


class NumericalGuardError(RelMeasError, RuntimeError):
    """A numerical guard tripped (convergence, budget, fit quality)."""


class QuadratureError(NumericalGuardError):
    """Quadrature failed to reach tolerance.

    Attributes
    ----------
    estimate : float
        The estimated absolute error of the rejected result.
    """

    def __init__(self, message, estimate):
        super().__init__(f"{message} (estimated error {estimate:.3e})")
        self.estimate = estimate


class ResourceGuardError(NumericalGuardError):
    """Requested work exceeds the configured budget."""


class FitError(NumericalGuardError):
    """Not enough usable samples for a decay-length fit."""


class ConfigError(RelMeasError, ValueError):
    """Invalid experiment configuration; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
        self.line = line
