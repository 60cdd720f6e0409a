"""Error hierarchy shared across the package.

Every error carries a stable machine-readable ``code`` plus an optional
``details`` mapping that is safe to serialize into API error envelopes.
"""
from __future__ import annotations

from typing import Any


class RebornError(Exception):
    """Base class for all domain errors."""

    code = "ERROR"

    def __init__(self, message: str, **details: Any) -> None:
        super().__init__(message)
        self.message = message
        self.details: dict[str, Any] = dict(details)

    def to_dict(self) -> dict[str, Any]:
        payload: dict[str, Any] = {"code": self.code, "message": self.message}
        if self.details:
            payload["details"] = self.details
        return payload


class MalformedJson(RebornError):
    code = "MALFORMED_JSON"


class MissingGraph(RebornError):
    code = "MISSING_GRAPH"


class MissingRoot(RebornError):
    code = "MISSING_ROOT"


class ProfileViolation(RebornError):
    code = "PROFILE_VIOLATION"

    def __init__(self, message: str, entity_id: str | None = None, **details: Any) -> None:
        if entity_id is not None:
            details.setdefault("entity_id", entity_id)
        super().__init__(message, **details)
        self.entity_id = entity_id


class NotDeposited(RebornError):
    code = "NOT_DEPOSITED"


class SourceUnreachable(RebornError):
    code = "SOURCE_UNREACHABLE"


class NotFound(RebornError):
    code = "NOT_FOUND"


class DuplicatePid(RebornError):
    code = "DUPLICATE_PID"


class ValidationFailed(RebornError):
    code = "VALIDATION_FAILED"

    def __init__(self, message: str, report: Any = None, **details: Any) -> None:
        if report is not None:
            details.setdefault("violations", [v.to_dict() for v in report.violations])
        super().__init__(message, **details)
        self.report = report


class Exhausted(RebornError):
    code = "EXHAUSTED"


class EmptyQuery(RebornError):
    code = "EMPTY_QUERY"


class EmptyText(RebornError):
    code = "EMPTY_TEXT"


class BadWeights(RebornError):
    code = "BAD_WEIGHTS"


class EmptySelection(RebornError):
    code = "EMPTY_SELECTION"


class DimMismatch(RebornError):
    code = "DIM_MISMATCH"


class EncoderMismatch(RebornError):
    code = "ENCODER_MISMATCH"


class EmptyIndex(RebornError):
    code = "EMPTY_INDEX"


class CorruptIndex(RebornError):
    code = "CORRUPT_INDEX"
