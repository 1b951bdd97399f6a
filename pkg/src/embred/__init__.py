"""User-level embedding reduction and bootstrapped evaluation toolkit."""

from .errors import (
    AlignmentError,
    ConfigError,
    DataError,
    DegenerateSampleError,
    EmbredError,
    FormatError,
    IncompleteGridError,
    NumericsError,
    ShapeError,
    UndefinedMetricError,
)

__version__ = "0.1.0"

__all__ = [
    "AlignmentError",
    "ConfigError",
    "DataError",
    "DegenerateSampleError",
    "EmbredError",
    "FormatError",
    "IncompleteGridError",
    "NumericsError",
    "ShapeError",
    "UndefinedMetricError",
    "__version__",
]
