"""Phonon Fock states and spatial cat states of a levitated nanodiamond
with an embedded NV spin: Hamiltonians, state-preparation protocols,
time-of-flight interference and decoherence estimates."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BasisMismatchError,
    BranchResolutionError,
    DomainError,
    NumericError,
    SingularityError,
    TruncationError,
)
from .units import CONSTANTS, ExperimentParams, derive  # noqa: E402

__all__ = [
    "__version__",
    "BasisMismatchError",
    "BranchResolutionError",
    "DomainError",
    "NumericError",
    "SingularityError",
    "TruncationError",
    "CONSTANTS",
    "ExperimentParams",
    "derive",
]
