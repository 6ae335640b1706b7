"""Engine error taxonomy.

Every failure that reaches an observation carries one :class:`ErrorCode`.
Kernel code raises the subclasses below; the canvas turns them into
``Error`` observations.
"""

from __future__ import annotations

from enum import Enum


class ErrorCode(str, Enum):
    ENTITY_NOT_FOUND = "EntityNotFound"
    PRECONDITION_FAILED = "PreconditionFailed"
    DEGENERATE_INPUT = "DegenerateInput"
    TYPE_MISMATCH = "TypeMismatch"
    NAME_CONFLICT = "NameConflict"
    UNSUPPORTED_TOOL = "UnsupportedTool"
    INDEX_OUT_OF_RANGE = "IndexOutOfRange"
    ENGINE_ERROR = "EngineError"
    TIMEOUT = "Timeout"


class GeoError(Exception):
    code: ErrorCode = ErrorCode.ENGINE_ERROR

    def __init__(self, message: str, *, arg: str | None = None, ref: str | None = None):
        super().__init__(message)
        self.message = message
        self.arg = arg
        self.ref = ref


class EntityNotFound(GeoError):
    code = ErrorCode.ENTITY_NOT_FOUND


class PreconditionFailed(GeoError):
    code = ErrorCode.PRECONDITION_FAILED


class DegenerateInput(GeoError):
    code = ErrorCode.DEGENERATE_INPUT


class TypeMismatch(GeoError):
    code = ErrorCode.TYPE_MISMATCH


class NameConflict(GeoError):
    code = ErrorCode.NAME_CONFLICT


class UnsupportedTool(GeoError):
    code = ErrorCode.UNSUPPORTED_TOOL


class IndexOutOfRange(GeoError):
    code = ErrorCode.INDEX_OUT_OF_RANGE


class EngineFailure(GeoError):
    code = ErrorCode.ENGINE_ERROR


class TurnTimeout(GeoError):
    code = ErrorCode.TIMEOUT


# Errors that silent mode converts into Undefined-valued objects.
SILENT_CODES = frozenset(
    {ErrorCode.DEGENERATE_INPUT, ErrorCode.PRECONDITION_FAILED, ErrorCode.INDEX_OUT_OF_RANGE}
)
