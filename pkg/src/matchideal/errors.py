"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class MatchIdealError(Exception):
    """Base class for all errors raised by this package."""


class KindMismatch(MatchIdealError, TypeError):
    """Matching (x) and tour (y) variables were mixed in one operation."""


class UnboundVariable(MatchIdealError, KeyError):
    pass


class SizeMismatch(MatchIdealError, ValueError):
    pass


class InvalidSize(MatchIdealError, ValueError):
    pass


class InvalidLevel(MatchIdealError, ValueError):
    pass


class InvalidInput(MatchIdealError, ValueError):
    pass


class OracleTooLarge(MatchIdealError, ValueError):
    pass


class SymmetrizationTooLarge(MatchIdealError, ValueError):
    pass


class DerivationTooLarge(MatchIdealError, ValueError):
    pass


class BasisTooLarge(MatchIdealError, ValueError):
    pass


class VertexCovered(MatchIdealError, ValueError):
    pass


class RowCovered(VertexCovered):
    pass


class VertexCollision(MatchIdealError, ValueError):
    pass


class NotAMember(MatchIdealError, ValueError):
    """The polynomial does not vanish on every solution.

    ``witness`` holds a solution (perfect matching or tour) on which the
    polynomial takes the nonzero value ``value``.
    """

    def __init__(self, message: str, witness=None, value=None):
        super().__init__(message)
        self.witness = witness
        self.value = value


class NotMetric(MatchIdealError, ValueError):
    pass


class NotAnSos(MatchIdealError, ValueError):
    pass


class NotPsd(MatchIdealError, ValueError):
    pass


class DualInvalid(MatchIdealError, ValueError):
    pass


class ShapeError(MatchIdealError, ValueError):
    pass


class FormatError(MatchIdealError, ValueError):
    """A text file did not follow the expected layout."""


class InternalInvariant(MatchIdealError, AssertionError):
    """A construction that should always succeed did not; this is a bug."""
