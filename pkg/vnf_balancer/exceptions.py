"""Custom exceptions for the VNF balancer."""

class ConfigurationError(Exception):
    """Exception raised when there's an error in configuration."""
    pass

class ParameterError(ValueError):
    """Exception raised when a parameter is outside its admissible domain."""
    pass

class TopologyError(Exception):
    """Exception raised when a topology violates its structural invariants."""
    pass

class PathError(Exception):
    """Base exception for path and catalog errors."""
    pass

class CatalogTooLargeError(PathError):
    """Exception raised when a route catalog exceeds the configured size cap."""
    pass

class CostRangeError(ValueError):
    """Exception raised when a cost function is evaluated outside [0, 1]."""
    pass

class ModelError(Exception):
    """Exception raised when a model instance cannot be built."""
    pass

class SolverError(Exception):
    """Base exception for solver-related errors."""
    pass

class InfeasibleError(SolverError):
    """Exception raised when a model has no feasible solution."""
    pass

class VerificationError(SolverError):
    """Exception raised when a solution fails independent verification."""
    pass

class LPFormatError(Exception):
    """Exception raised when LP text cannot be parsed."""
    pass

class ReportError(Exception):
    """Exception raised when report files cannot be written."""
    pass
