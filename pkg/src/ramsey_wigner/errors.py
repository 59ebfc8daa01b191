class ConfigurationError(ValueError):
    """Invalid parameters, schedules or grids."""


class NumericalError(RuntimeError):
    """Non-convergence, NaN/overflow or violated numerical invariants."""


class DomainError(ValueError):
    """A state or request leaves the representable region of the grid."""


class CalibrationError(RuntimeError):
    """The calibration scan did not show a usable contrast collapse."""
