"""Exception hierarchy.

``InputError`` subclasses describe malformed input (CLI exit code 2);
``CheckFailure`` subclasses describe a mathematical check that did not hold
(CLI exit code 1) and usually carry a witness.
"""


class KDilationError(Exception):
    """Base class for all package errors."""


class InputError(KDilationError, ValueError):
    """Malformed or inconsistent input data."""


class CheckFailure(KDilationError):
    """A mathematical property failed; ``witness`` describes how."""

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


# graph ---------------------------------------------------------------------


class GraphSpecError(InputError):
    pass


class MissingSquare(CheckFailure):
    pass


class DuplicateSquare(CheckFailure):
    pass


class EndpointMismatch(CheckFailure):
    pass


class CubeViolation(CheckFailure):
    pass


class NotComposable(InputError):
    pass


class DegreeOutOfRange(InputError):
    pass


# linalg --------------------------------------------------------------------


class NotHermitian(InputError):
    pass


class NotPSD(CheckFailure):
    pass


class NoConvergence(CheckFailure):
    pass


# fock / family -------------------------------------------------------------


class NotUnimodular(InputError):
    pass


class CapTooSmall(InputError):
    pass


class ShapeMismatch(InputError):
    pass


class RelationViolated(CheckFailure):
    pass


class RowContractionViolated(CheckFailure):
    pass


class TailBoundExceeded(CheckFailure):
    pass


class NotInvariant(CheckFailure):
    pass


# dilation / states ---------------------------------------------------------


class GramNotPSD(CheckFailure):
    pass


class NotCofinal(CheckFailure):
    pass


class InvarianceViolated(CheckFailure):
    pass


class NotCuntzPimsner(CheckFailure):
    pass


class NotCyclic(CheckFailure):
    pass


class GraphMismatch(InputError):
    pass


class NotNormalized(InputError):
    pass


# characters ----------------------------------------------------------------


class RowBoundViolated(CheckFailure):
    pass


class SquareViolated(CheckFailure):
    pass


class AlphaBNonzeroOnDiagonal(CheckFailure):
    pass
