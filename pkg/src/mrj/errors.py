"""
MRJ Error Types

Domain exceptions raised by the simulator and the dominance lab. They all
derive from ValueError so callers catching ValueError keep working.
"""

from typing import Optional


class MRJError(ValueError):
    """Base class for all multiresource-job errors."""


class DimensionMismatchError(MRJError):
    """A requirement vector does not match the dimension of a distribution or grid."""


class InvalidJobTypeError(MRJError):
    """A requirement or job type index lies outside the grid."""


class EnumerationTooLargeError(MRJError):
    """Candidate enumeration would exceed the configured cap."""

    def __init__(self, cap: int, what: str = "service options"):
        self.cap = cap
        super().__init__(f"Enumeration of {what} exceeds the cap of {cap} entries")


class ConstructionInfeasibleError(MRJError):
    """An explicit beta construction produced a negative intermediate mass."""


class MassOverflowError(MRJError):
    """A constructed service mix needs more than unit probability mass."""

    def __init__(self, total_mass: float, required_K: Optional[int] = None):
        self.total_mass = total_mass
        self.required_K = required_K
        message = f"Service mix needs total mass {total_mass:.6f} > 1"
        if required_K is not None:
            message += f"; use K >= {required_K}"
        super().__init__(message)


class NoStableKError(MRJError):
    """No discretization level can stabilize the requested arrival rate."""


class NotStabilizableError(MRJError):
    """The arrival rates are not strictly dominated at this discretization."""

    def __init__(self, delta: float):
        self.delta = delta
        super().__init__(f"Not stabilizable at this K: best dominance margin is {delta:.6g} <= 0")


class UnknownStabilityBoundaryError(MRJError):
    """No built-in stability boundary exists for the distribution family."""


class ConfigError(MRJError):
    """Invalid experiment or simulation configuration."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class TraceError(MRJError):
    """A trace file could not be parsed or normalized."""

    def __init__(self, message: str, row: Optional[int] = None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class FeasibilityViolationError(MRJError):
    """The in-service set exceeded capacity during a simulation audit."""
