"""Simulation and high-frequency sample-autocovariance asymptotics for Levy-driven MCARMA processes."""
from __future__ import annotations

from ._backend import BACKEND
from .errors import (
    BurnInError,
    ConfigError,
    HfmcarmaError,
    OffGridLagError,
    QuadratureError,
    SimulationError,
    UnstableMatrixError,
    UnsupportedDecompositionError,
)
from .levy import (
    BrownianMotion,
    CompoundPoisson,
    GaussianJumps,
    IndependentComponents,
    NuEstimate,
    QuadraticForm,
    TwoPointJumps,
)
from .mcarma import McarmaModel, SamplePath, build_model

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BrownianMotion",
    "BurnInError",
    "CompoundPoisson",
    "ConfigError",
    "GaussianJumps",
    "HfmcarmaError",
    "IndependentComponents",
    "McarmaModel",
    "NuEstimate",
    "OffGridLagError",
    "QuadraticForm",
    "QuadratureError",
    "SamplePath",
    "SimulationError",
    "TwoPointJumps",
    "UnstableMatrixError",
    "UnsupportedDecompositionError",
    "build_model",
]
