"""Exception hierarchy shared by all modules."""


class ChaosExpError(Exception):
    """Base class for library errors."""


class DivergenceError(ChaosExpError):
    """A series or integral does not converge for the requested parameters."""


class RegimeError(ChaosExpError):
    """Parameters fall outside the Hurst regime an operation is defined for."""


class QuadratureError(ChaosExpError):
    """Numerical quadrature could not reach the requested tolerance."""


class ToleranceError(ChaosExpError):
    """A reported error bound exceeds the tolerance requested by the caller."""


class PSDError(ChaosExpError):
    """A covariance matrix or embedding spectrum is not positive semidefinite."""


class SizeLimitError(ChaosExpError):
    """Problem size exceeds what a dense method supports."""


class SingularMatrixError(ChaosExpError):
    """A matrix that must be invertible is (numerically) singular."""


class InsufficientSampleError(ChaosExpError):
    """Too few replications for the requested estimator."""


class ConfigError(ChaosExpError):
    """Invalid experiment configuration."""


class DegenerateGridError(ChaosExpError):
    """A fit grid has too few points or non-positive values."""
