"""Exception taxonomy shared across the package.

Every error raised deliberately by this package derives from TravlrError so
the CLI can map "our" failures to exit code 1 without catching bugs.
"""

from __future__ import annotations


class TravlrError(Exception):
    """Base class for all package errors."""


class InvalidInput(TravlrError, ValueError):
    """Caller passed a value outside a documented contract."""


class ReferentError(TravlrError):
    """A query referent matched zero or several objects where exactly one is required."""


class ParseError(TravlrError):
    """Input text deviates from the caption/query grammar.

    Carries the byte offset of the failure and the token(s) expected there.
    """

    def __init__(self, message: str, offset: int, expected: tuple[str, ...] = ()):
        self.offset = offset
        self.expected = expected
        detail = f"{message} at offset {offset}"
        if expected:
            detail += " (expected " + " | ".join(repr(e) for e in expected) + ")"
        super().__init__(detail)


class InfeasiblePartition(TravlrError):
    """No pair partition satisfies the coverage/feasibility constraints."""


class SamplingExhausted(TravlrError):
    """Rejection sampling hit the retry cap; the constraint set is too tight."""


class GridFull(TravlrError):
    """More objects requested than free grid cells."""


class MissingPrediction(TravlrError):
    """Manifest ids with no matching prediction."""

    def __init__(self, ids: list[str]):
        self.ids = ids
        super().__init__(f"{len(ids)} manifest id(s) missing from predictions: {_preview(ids)}")


class UnknownId(TravlrError):
    """Prediction ids with no matching manifest record."""

    def __init__(self, ids: list[str]):
        self.ids = ids
        super().__init__(f"{len(ids)} prediction id(s) not in manifest: {_preview(ids)}")


class TaskMismatch(TravlrError):
    """An analysis was asked for on records of the wrong task."""


def _preview(ids: list[str], limit: int = 10) -> str:
    head = ", ".join(ids[:limit])
    return head + (", ..." if len(ids) > limit else "")
