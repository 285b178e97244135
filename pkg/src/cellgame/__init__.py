"""Game-theoretic association and power control for cellular uplinks."""

from ._backend import BACKEND
from .errors import (
    CellGameError,
    ConvergenceError,
    DomainError,
    PreconditionError,
    ScenarioParseError,
    SizeError,
    ValidationError,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "__version__",
    "CellGameError",
    "ConvergenceError",
    "DomainError",
    "PreconditionError",
    "ScenarioParseError",
    "SizeError",
    "ValidationError",
]
