"""Exception hierarchy shared across the package."""


class GWBoundError(Exception):
    """Base class for all package errors."""


class DomainError(GWBoundError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class RangeError(GWBoundError, ValueError):
    """A target value is outside the attained range of a function."""


class NonConvergence(GWBoundError, RuntimeError):
    """An iterative solver exhausted its budget without meeting tolerance."""


class RegimeError(GWBoundError, ValueError):
    """The offspring law is in the wrong analytic regime for the request."""


class PrecisionFloor(GWBoundError, ArithmeticError):
    """Double precision ran out before the iteration target was met."""


class NoSuchNode(GWBoundError, KeyError):
    """The node address does not exist in the simulated tree."""


class NotACutset(GWBoundError, ValueError):
    """The node set violates the cutset conditions (antichain + coverage)."""


class MemoryBudgetExceeded(GWBoundError, MemoryError):
    """A simulation would exceed the configured node cap."""


class InsufficientGrid(GWBoundError, ValueError):
    """A numeric grid cannot support the requested diagnostic."""


class ConfigError(GWBoundError, ValueError):
    """A run configuration failed schema validation."""
