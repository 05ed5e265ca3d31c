"""Exception types shared across the package."""


class ConvexSepError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatch(ConvexSepError):
    """Target point and set live in different ambient dimensions."""


class DegenerateDirection(ConvexSepError):
    """Step direction is numerically zero; the iterate has converged."""


class NonConvergence(ConvexSepError):
    """The hull projection solver hit its iteration cap."""


class ExactOracleUnavailable(ConvexSepError):
    """The set provides no exact linear-optimization oracle."""


class BudgetExceeded(ConvexSepError):
    """Exact enumeration was requested above the configured size cap."""


class NonUnitVector(ConvexSepError):
    """A Bloch/measurement vector failed the unit-norm invariant."""


class NoSeparation(ConvexSepError):
    """A bound was requested from a functional that does not separate."""


class InsufficientData(ConvexSepError):
    """Too few trace points remain for a convergence fit."""


class Stalled(ConvexSepError):
    """An optimization pipeline reached its floor without separating."""
