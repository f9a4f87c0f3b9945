"""Exception hierarchy."""


class HfmcarmaError(Exception):
    """Base class for all package errors."""


class UnstableMatrixError(HfmcarmaError, ValueError):
    """A matrix required to be stable has an eigenvalue with real part >= -tol."""


class QuadratureError(HfmcarmaError, RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""


class UnsupportedDecompositionError(HfmcarmaError, TypeError):
    """The driver has no compound-Poisson jump decomposition."""


class OffGridLagError(HfmcarmaError, ValueError):
    """A lag is not an integer multiple of the sampling step."""


class BurnInError(HfmcarmaError, RuntimeError):
    """The burn-in needed to reach stationarity exceeds the step budget."""


class SimulationError(HfmcarmaError, RuntimeError):
    """A simulated path contains non-finite values."""


class ConfigError(HfmcarmaError, ValueError):
    """Invalid experiment configuration; the message names the offending field."""
