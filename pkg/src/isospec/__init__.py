"""Samplers, exact moments, distances and bounds for random matrices with a
prescribed spectrum."""

from .errors import (CapExceededError, ConfigError, DimensionError, IsospecError,
                     RankDeficiencyError, SampleDataError)
from .linalg import CoefficientFrame, FieldTag, HermitianMatrix, Spectrum
from .rng import RngStream

__version__ = "0.1.0"

__all__ = [
    "CapExceededError", "CoefficientFrame", "ConfigError", "DimensionError", "FieldTag",
    "HermitianMatrix", "IsospecError", "RankDeficiencyError", "RngStream", "SampleDataError",
    "Spectrum", "__version__",
]
