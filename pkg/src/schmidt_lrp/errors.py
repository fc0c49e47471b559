"""Exception hierarchy shared by all modules."""


class SchmidtLRPError(Exception):
    """Base class for library errors."""


class ShapeError(SchmidtLRPError, ValueError):
    """Operand shapes are inconsistent with the requested operation."""


class DomainError(SchmidtLRPError, ValueError):
    """A parameter lies outside its mathematical domain."""


class DegenerateObservableError(DomainError):
    """Twirl coefficients vanish, so the fidelity cannot be reconstructed."""


class StateValidityError(DomainError):
    """A probability computed from a state falls outside [0, 1] beyond tolerance."""


class ResourceError(SchmidtLRPError, MemoryError):
    """Materializing an array would exceed the configured memory cap."""
