"""Exception types shared across modules."""


class PhaseMinmaxError(Exception):
    """Base class for all package errors."""


class ParameterError(PhaseMinmaxError, ValueError):
    """A parameter is outside its admissible range."""


class AdmissibilityError(PhaseMinmaxError, ValueError):
    """eps is too large for the requested lambda (no three stable roots)."""


class GridError(PhaseMinmaxError, ValueError):
    """Grid too small or field does not match the grid."""


class ShapeError(GridError):
    """Field length does not match the grid node count."""


class FieldParseError(PhaseMinmaxError, ValueError):
    """Malformed field checkpoint file."""

    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class OptimizationError(PhaseMinmaxError, RuntimeError):
    """Relaxation or Newton iteration failed; ``trace`` holds the history."""

    def __init__(self, message, trace=None):
        self.trace = trace if trace is not None else []
        super().__init__(message)


class EigenError(PhaseMinmaxError, RuntimeError):
    def __init__(self, message, residual=None):
        self.residual = residual
        super().__init__(message)


class InfeasibleModelError(PhaseMinmaxError, ValueError):
    """Constants chooser could not satisfy a feasibility inequality."""

    def __init__(self, message, remark=None, report=None):
        self.remark = remark
        self.report = report or {}
        super().__init__(message)


class UnsupportedError(PhaseMinmaxError, NotImplementedError):
    pass


class QuadratureError(PhaseMinmaxError, RuntimeError):
    """Quadrature failed to converge under refinement."""
