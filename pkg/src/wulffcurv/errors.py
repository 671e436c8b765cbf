"""Exception hierarchy shared by all modules."""


class WulffCurvError(Exception):
    """Base class for every error raised by this package."""


class NonUnitInput(WulffCurvError, ValueError):
    pass


class NonPositiveValue(WulffCurvError, ValueError):
    pass


class NonOrthonormalFrame(WulffCurvError, ValueError):
    pass


class ConvexityViolation(WulffCurvError):
    """The anisotropy fails ``D^2F + F 1 > 0`` somewhere on its sample."""

    def __init__(self, message, argmin=None, min_eigenvalue=None):
        super().__init__(message)
        self.argmin = argmin
        self.min_eigenvalue = min_eigenvalue


class DegenerateParametrization(WulffCurvError):
    pass


class ImmersionLoss(DegenerateParametrization):
    """A deformed surface stopped being an immersion at some node."""


class ProjectionFailure(WulffCurvError):
    pass


class NonTangentField(WulffCurvError, ValueError):
    pass


class SizeMismatch(WulffCurvError, ValueError):
    pass


class NotPositiveDefinite(WulffCurvError, ValueError):
    pass


class NonPositiveSpectrum(WulffCurvError, ValueError):
    pass


class TopologyError(WulffCurvError):
    pass


class NotCritical(WulffCurvError):
    """The surface does not satisfy the Euler-Lagrange equation."""

    def __init__(self, message, sup_residual=None):
        super().__init__(message)
        self.sup_residual = sup_residual


class SolverFailure(WulffCurvError):
    pass


class SpecParseError(WulffCurvError, ValueError):
    """Malformed anisotropy or surface mini-language string."""
