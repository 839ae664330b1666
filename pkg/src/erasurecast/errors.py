"""Exception hierarchy shared by every module."""


class ErasureCastError(Exception):
    """Base class for all package errors."""


class ValidationError(ErasureCastError, ValueError):
    pass


class OrderViolation(ValidationError):
    """eps1 must be strictly smaller than eps2."""


class RangeViolation(ValidationError):
    pass


class JointMassViolation(ValidationError):
    pass


class Infeasible(ErasureCastError):
    """The requested demands cannot be covered by the hybrid scheme."""


class RuntimeExceeded(ErasureCastError, RuntimeError):
    """A simulation ran past its slot cap."""


class UnknownIndex(ErasureCastError, KeyError):
    pass


class InconsistentSystem(ErasureCastError, RuntimeError):
    """Equations derived from one true source contradicted each other (a bug)."""
