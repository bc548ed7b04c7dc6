"""Exception types raised across the package.

Invalid inputs derive from :class:`ValueError`; failures of the numerics on
otherwise valid inputs derive from :class:`NumericalError`.
"""


class NumericalError(ArithmeticError):
    """A computation could not produce a finite, trustworthy result."""


class NonStationary(ValueError):
    """An AR characteristic root lies on or outside the unit circle."""


class InsufficientLags(ValueError):
    """An autocovariance sequence is too short for the requested size."""


class ZeroPowerModel(ValueError):
    """A model with zero variance cannot be rescaled to a target power."""


class LengthMismatch(ValueError):
    """A noise trajectory does not match the number of control steps."""


class PhaseUndefined(ValueError):
    """The composite-pulse phase arccos(-theta/(4 pi)) has no real value."""


class BadInit(ValueError):
    """An initial sequence violates the total-angle constraint."""


class AllPerturbationsNonStationary(ValueError):
    """Every sampled model perturbation left the stationary region."""


class SingularAfterRidge(NumericalError):
    """The KKT system stayed singular after ridge regularization."""


class NonFiniteObjective(NumericalError):
    """The objective or its gradient evaluated to inf or nan."""
