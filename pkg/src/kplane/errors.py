"""Exception types.  All derive from :class:`KPlaneError` (a ``ValueError``)."""


class KPlaneError(ValueError):
    pass


class DomainError(KPlaneError):
    """Point or plane outside the domain of a chart or bracket."""


class EquatorError(DomainError):
    """Ambient point with vanishing last coordinate (no chart image)."""


class DegenerateSimplexError(KPlaneError):
    """Points are affinely dependent."""


class NullAxisError(KPlaneError):
    """Reflection axis is (numerically) Minkowski-null."""


class ConstraintError(KPlaneError):
    """Boost parameters violate a^2 - b^2 = 1 (or a <= 0)."""


class PoleError(DomainError):
    """Evaluation on the pole hyperplane b*x_d + a = 0 of a chart map."""


class InvalidLorentzError(KPlaneError):
    """Matrix does not preserve the Minkowski form."""


class SupportError(KPlaneError):
    """A function's support violates the precondition of an operation."""


class SingularMatrixError(KPlaneError):
    """A matrix that must be invertible is not."""


class ZeroDenominatorError(KPlaneError):
    """Ratio requested for a function of zero norm."""


class RegimeError(KPlaneError):
    """Scan family does not satisfy the requested stability regime."""


class NonFiniteError(KPlaneError):
    """Integrand produced a non-finite value."""

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location
