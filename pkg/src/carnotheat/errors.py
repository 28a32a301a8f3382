"""Exception types raised by the library.

Validation failures carry a dedicated class so callers can distinguish
which contract was violated; plain precondition slips (t <= 0, bad
dimensions) raise ValueError.
"""


class CarnotHeatError(Exception):
    """Base class for all library-specific errors."""


class GroupValidationError(CarnotHeatError, ValueError):
    """A proposed group specification violates a structural invariant."""


class NotSkew(GroupValidationError):
    """Some J matrix is not skew-symmetric."""


class JNotInjective(GroupValidationError):
    """The J matrices are linearly dependent, so lambda -> J(lambda) is not injective."""


class NotBracketGenerating(GroupValidationError):
    """The horizontal layer does not bracket-generate the vertical layer."""


class NotHType(CarnotHeatError, ValueError):
    """Operation requires A(lambda) = |lambda|^2 I and the group fails the check."""


class Unbounded(CarnotHeatError, ValueError):
    """Operation requires a bounded region."""


class FieldNotAdmissible(CarnotHeatError, ValueError):
    """Test vector field exceeds the unit-norm constraint."""


class InsufficientCurve(CarnotHeatError, ValueError):
    """A deficit curve does not reach small enough times for the request."""


class AccuracyError(CarnotHeatError, RuntimeError):
    """Quadrature could not meet the requested tolerance within budget."""

    def __init__(self, message: str, estimate: float = float("nan")):
        super().__init__(message)
        self.estimate = estimate


class BudgetExhausted(CarnotHeatError, RuntimeError):
    """Sampling or node budget ran out before reaching tolerance."""


class Unsupported(CarnotHeatError, ValueError):
    """Requested configuration is outside the supported desk-scale range."""


class ConfigError(CarnotHeatError, ValueError):
    """Malformed experiment configuration or CLI input."""
