"""Exception hierarchy.  The CLI maps every ``NumericError`` to exit status 3."""


class NumericError(Exception):
    """Base class for failures inside the numerical modules."""


class DomainError(NumericError, ValueError):
    """Input outside the domain of a closed-form expression."""


class SingularityError(NumericError, ZeroDivisionError):
    """Evaluation at a pole of a closed-form expression."""


class TruncationError(NumericError, RuntimeError):
    """The Fock truncation or the position grid is too small for the state."""


class BasisMismatchError(NumericError, ValueError):
    """Two objects live in different Hilbert spaces."""


class BranchResolutionError(NumericError, RuntimeError):
    """Spin branches are not spectrally resolvable by a conditional pulse."""
