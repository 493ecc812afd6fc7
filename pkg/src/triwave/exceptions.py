"""Exception hierarchy for triwave."""


class TriwaveError(Exception):
    """Base class for all package errors."""


class ConfigurationError(TriwaveError, ValueError):
    """Invalid grid, model, solver or table configuration.

    ``key`` names the offending configuration entry (``"model.p"``) when known,
    so callers parsing config files can anchor the message to a line.
    """

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class InputError(TriwaveError, OSError):
    """Unreadable or malformed input file."""


class DegenerateFieldError(TriwaveError, ValueError):
    """A component has zero L2 norm where a nonzero one is required."""


class UnsupportedDiscretizationError(TriwaveError, ValueError):
    """Operation is not valid under the grid's discretization."""


class ComparisonError(TriwaveError, ValueError):
    """Two results cannot be compared (different grids or parameters)."""
