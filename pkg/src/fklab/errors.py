"""Exception hierarchy shared across the package."""


class FKLabError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(FKLabError, ValueError):
    """A parameter is outside its documented domain."""


class UnsupportedDimensionError(InvalidParameterError):
    """Operation requires a dimension the geometry does not have (e.g. duality needs d=2)."""


class UnsupportedRegimeError(FKLabError, ValueError):
    """Dynamics requested outside the regime they target (e.g. q < 1 heat bath)."""


class UnsupportedAlgorithmError(FKLabError, ValueError):
    """Algorithm/parameter mismatch (e.g. cluster updates with non-integer q)."""


class ResourceCapError(FKLabError, RuntimeError):
    """A configured resource cap would be exceeded."""


class TooManyEdgesError(ResourceCapError):
    """Enumeration requested beyond the hard edge cap."""


class InvalidWindowError(FKLabError, ValueError):
    """An estimator window does not fit inside the box with the required margin."""


class InsufficientDataError(FKLabError, ValueError):
    """Not enough usable data points for the requested estimate."""


class ContractViolationError(FKLabError, ValueError):
    """A caller-supplied object breaks a precondition (e.g. a non-increasing event)."""
