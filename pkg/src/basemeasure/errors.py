"""Exception types raised by the library."""


class BaseMeasureError(Exception):
    """Root of every error raised by :mod:`basemeasure`."""


class DegenerateBasis(BaseMeasureError, ValueError):
    """A tangent basis is (numerically) rank-deficient."""


class NonFiniteDerivative(BaseMeasureError, ArithmeticError):
    """A directional derivative evaluated to inf or nan."""


class InvalidBijector(BaseMeasureError, ValueError):
    """Bijector parameters do not define an invertible map."""


class DomainError(BaseMeasureError, ValueError):
    """A bijector was evaluated outside of its domain."""


class AmbiguousTangent(BaseMeasureError, ValueError):
    """Mixture components of minimal dimension disagree on the tangent space."""


class UndefinedResampling(BaseMeasureError, ArithmeticError):
    """Measure-aware resampling has no well-defined answer for these weights."""


class UndefinedComparison(BaseMeasureError, ArithmeticError):
    """Two dimensioned weights cannot be compared."""
