"""Shrinking-target hitting times and logarithm laws, from torus maps up to hyperbolic geodesic flows."""

from loglaw.errors import (
    ConfigError,
    InsufficientDataError,
    InvalidArgumentError,
    LoglawError,
    NumericDomainError,
    ReductionFailure,
    SamplingFailure,
)
from loglaw.rng import RngStream, rng_stream
from loglaw.core import SystemModel, TargetFamily, advance, sample_invariant

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "InsufficientDataError",
    "InvalidArgumentError",
    "LoglawError",
    "NumericDomainError",
    "ReductionFailure",
    "SamplingFailure",
    "RngStream",
    "rng_stream",
    "SystemModel",
    "TargetFamily",
    "advance",
    "sample_invariant",
    "__version__",
]
