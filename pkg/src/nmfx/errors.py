"""Exception hierarchy shared by all nmfx modules."""


class NmfxError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(NmfxError):
    """An input value violates a documented precondition or invariant."""


class MalformedHeaderError(ValidationError):
    """Array file header is structurally broken or inconsistent with the payload."""


class UnsupportedDtypeError(ValidationError):
    """Array file declares a dtype outside the supported little-endian float set."""


class NegativeEntryError(ValidationError):
    """Data that must be nonnegative contains a negative entry."""


class ShapeMismatchError(ValidationError):
    """Operand shapes do not conform."""


class SolverError(NmfxError):
    """Base class for numerical-solver failures."""


class SolverDivergenceError(SolverError):
    """A factor picked up NaN/Inf entries; usually a bad eps or corrupt input."""


class IterationBudgetError(SolverError):
    """Iteration budget exhausted before the optimality certificate held."""
