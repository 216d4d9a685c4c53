"""Exception types raised across the package."""


class HazardBoundsError(Exception):
    """Base class for all package errors."""


class InvalidProbabilityError(HazardBoundsError, ValueError):
    pass


class DegenerateWeightsError(HazardBoundsError, ValueError):
    pass


class ParameterOrderError(HazardBoundsError, ValueError):
    pass


class GraphSizeError(HazardBoundsError, ValueError):
    pass


class DomainError(HazardBoundsError, ValueError):
    pass


class CapacityError(HazardBoundsError, ValueError):
    """An exact oracle was asked to enumerate more states than it allows."""


class ContractViolation(HazardBoundsError, ValueError):
    pass


class NumericalError(HazardBoundsError, RuntimeError):
    pass


class EdgeListParseError(HazardBoundsError, ValueError):
    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class ConvergenceError(HazardBoundsError, RuntimeError):
    """Power iteration ran out of iterations; ``estimate`` holds the last value."""

    def __init__(self, message, estimate, iterations):
        super().__init__(message)
        self.estimate = estimate
        self.iterations = iterations


class ConfigError(HazardBoundsError, ValueError):
    """Invalid experiment configuration; ``path`` names the offending field."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")
