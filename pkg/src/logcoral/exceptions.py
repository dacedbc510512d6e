"""Exception types shared across the package."""


class LogCoralError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInput(LogCoralError):
    """Input violates a documented precondition (shape, range, finiteness)."""


class NotPositiveDefinite(LogCoralError):
    """Matrix has a non-positive eigenvalue where SPD is required."""

    def __init__(self, eigenvalue, message=None):
        self.eigenvalue = eigenvalue
        super().__init__(message or f"matrix is not positive definite: eigenvalue {eigenvalue!r} <= 0")


class NumericalFailure(LogCoralError):
    """An iterative numerical routine failed to converge or produced NaN."""

    def __init__(self, message, iterations=None, component=None):
        self.iterations = iterations
        self.component = component
        super().__init__(message)


class ParseError(LogCoralError):
    """Malformed external data file; carries the offending line number."""

    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)
