"""Scalar conventions shared by every module: Undefined, tolerance policy, angle units."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

DEFAULT_ABS_TOL = 4e-7
DEFAULT_REL_TOL = 1e-3


class _Undefined:
    """Singleton marking a scalar or object with no well-defined value."""

    _instance: _Undefined | None = None

    def __new__(cls) -> _Undefined:
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "Undefined"

    def __bool__(self) -> bool:
        return False

    def __reduce__(self):
        return (_Undefined, ())


UNDEFINED = _Undefined()


def is_undefined(value: Any) -> bool:
    return value is UNDEFINED


def defined_float(value: Any) -> Any:
    """Map non-finite floats to UNDEFINED; pass everything else through."""
    if isinstance(value, float) and not math.isfinite(value):
        return UNDEFINED
    return value


@dataclass(frozen=True)
class TolerancePolicy:
    """Two-sided numeric tolerance: absolute OR relative."""

    abs_tol: float = DEFAULT_ABS_TOL
    rel_tol: float = DEFAULT_REL_TOL

    def __post_init__(self) -> None:
        if self.abs_tol < 0 or self.rel_tol < 0:
            raise ValueError("tolerances must be nonnegative")

    def passes(self, a: Any, b: Any) -> bool:
        return tol_pass(a, b, self)

    def near_zero(self, residual: float) -> bool:
        return tol_pass(residual, 0.0, self)


DEFAULT_POLICY = TolerancePolicy()


def tol_pass(a: Any, b: Any, policy: TolerancePolicy = DEFAULT_POLICY) -> bool:
    if is_undefined(a) or is_undefined(b):
        return False
    a = float(a)
    b = float(b)
    if not (math.isfinite(a) and math.isfinite(b)):
        return False
    diff = abs(a - b)
    return diff <= policy.abs_tol or diff <= policy.rel_tol * max(abs(a), abs(b))


def to_rad(deg: float) -> float:
    return deg * (math.pi / 180.0)


def to_deg(rad: float) -> float:
    return rad * (180.0 / math.pi)


def deg_rad_convert(x: float, direction: str) -> float:
    if direction == "to_rad":
        return to_rad(x)
    if direction == "to_deg":
        return to_deg(x)
    raise ValueError(f"unknown direction {direction!r}")


def fmt_number(x: Any) -> str:
    """Short human-readable number used in printable observation values."""
    if is_undefined(x):
        return "undefined"
    if isinstance(x, bool):
        return "true" if x else "false"
    x = float(x)
    if x == 0:
        return "0"
    text = f"{x:.10g}"
    if "e" not in text and "." in text:
        text = text.rstrip("0").rstrip(".")
    return text
