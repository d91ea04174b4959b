"""Exception types and the undefined-value marker shared across modules."""

from __future__ import annotations

from dataclasses import dataclass


class SoftEvalError(ValueError):
    """Base class for input and validation errors."""


class OutOfRangeError(SoftEvalError):
    pass


class EmptyAnnotationsError(SoftEvalError):
    pass


class InvalidVoteError(SoftEvalError):
    pass


class TieError(SoftEvalError):
    """Raised for a split majority vote under the ``error`` tie policy."""


class InvalidScoreError(SoftEvalError):
    pass


class DegenerateLabelsError(SoftEvalError):
    """No expected positives or no expected negatives.

    ``which`` names the vanished total: ``"positive"`` or ``"negative"``.
    """

    def __init__(self, which: str, message: str | None = None):
        self.which = which
        super().__init__(message or f"total expected {which} mass is zero")


class InputError(SoftEvalError):
    """Malformed input file; carries the offending line number when known."""

    def __init__(self, message: str, path=None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:"
            if line is not None:
                where += f"{line}:"
            where += " "
        super().__init__(where + message)


@dataclass(frozen=True)
class Undefined:
    """Marker for a value that cannot be computed from the given data.

    Used in place of NaN so reports never carry silent defaults.
    """

    reason: str

    def __bool__(self) -> bool:
        return False


def is_defined(value) -> bool:
    return not isinstance(value, Undefined)
