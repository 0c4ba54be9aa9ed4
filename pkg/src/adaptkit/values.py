"""Typed values shared by the context store, scene model, and DSL.

A context value is one of: bool, int, float, str (no newlines), or
:class:`Vec3`. Floats and Vec3 components must be finite. Two textual
renderings exist:

* the fixed rendering used in traces and state files (floats with exactly
  6 decimals, Vec3 as ``(x,y,z)`` without spaces, strings quoted), and
* the minimal rendering used by the rule pretty-printer (``repr`` floats).

Equality used for change detection is bitwise on floats, so ``0.0`` and
``-0.0`` count as different values and no epsilon is applied anywhere.
"""

from __future__ import annotations

import math
import re
import struct
from dataclasses import dataclass

from .errors import TypeMismatch

TAU = 2.0 * math.pi


@dataclass(frozen=True)
class Vec3:
    """A 3D point/offset in meters; y is the vertical axis."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        for c in (self.x, self.y, self.z):
            if not isinstance(c, (int, float)) or isinstance(c, bool) or not math.isfinite(c):
                raise TypeMismatch(f"Vec3 components must be finite numbers, got {c!r}")
        # normalize ints handed in by literals
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "z", float(self.z))


Value = bool | int | float | str | Vec3

_TYPE_NAMES = {bool: "bool", int: "int", float: "float", str: "text", Vec3: "vec3"}


def type_name(value: Value) -> str:
    """Name of a value's type; bool is checked before int (bool is an int subclass)."""
    for t in (bool, int, float, str, Vec3):
        if isinstance(value, t):
            return _TYPE_NAMES[t]
    raise TypeMismatch(f"unsupported value type: {type(value).__name__}")


def check_value(value: Value) -> Value:
    """Validate domain invariants: finite floats, no newlines in text."""
    name = type_name(value)
    if name == "float" and not math.isfinite(value):
        raise TypeMismatch("float values must be finite")
    if name == "text" and ("\n" in value or "\r" in value):
        raise TypeMismatch("text values must not contain newlines")
    return value


def _float_bits(x: float) -> bytes:
    return struct.pack("<d", x)


def values_equal(a: Value, b: Value) -> bool:
    """Change-detection equality: exact for bool/int/text, bitwise for floats."""
    if type_name(a) != type_name(b):
        return False
    if isinstance(a, float):
        return _float_bits(a) == _float_bits(b)
    if isinstance(a, Vec3):
        return (
            _float_bits(a.x) == _float_bits(b.x)
            and _float_bits(a.y) == _float_bits(b.y)
            and _float_bits(a.z) == _float_bits(b.z)
        )
    return a == b


def normalize_yaw(radians: float) -> float:
    """Wrap an angle into [0, 2*pi). Guards the fmod edge that returns 2*pi."""
    r = radians % TAU
    if r >= TAU:  # tiny negative inputs can wrap to exactly TAU
        r = 0.0
    return r + 0.0  # collapse -0.0


def format_float(x: float) -> str:
    """Fixed 6-decimal rendering (round-half-even) used in traces and state files."""
    return f"{x:.6f}"


def quote_text(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def render_value(value: Value) -> str:
    """Fixed rendering for traces and state files."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, Vec3):
        return f"({format_float(value.x)},{format_float(value.y)},{format_float(value.z)})"
    if isinstance(value, str):
        return quote_text(value)
    raise TypeMismatch(f"unsupported value type: {type(value).__name__}")


_INT_RE = re.compile(r"-?\d+$")
_FLOAT_RE = re.compile(r"-?\d+(?:\.\d+(?:[eE][+-]?\d+)?|[eE][+-]?\d+)$")
_NUM = r"-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?"
_VEC_RE = re.compile(rf"\(\s*({_NUM})\s*,\s*({_NUM})\s*,\s*({_NUM})\s*\)$")


def unquote_text(s: str) -> str | None:
    """Inverse of quote_text; None if s is not a well-formed quoted string."""
    if len(s) < 2 or s[0] != '"' or s[-1] != '"':
        return None
    out = []
    i = 1
    while i < len(s) - 1:
        c = s[i]
        if c == "\\":
            if i + 1 >= len(s) - 1 or s[i + 1] not in ('"', "\\"):
                return None
            out.append(s[i + 1])
            i += 2
        elif c == '"':
            return None  # unescaped quote before the closing one
        else:
            out.append(c)
            i += 1
    return "".join(out)


def parse_value(text: str) -> Value:
    """Parse the fixed rendering back into a typed value.

    Raises ValueError when the text is not a recognizable literal.
    """
    t = text.strip()
    if t == "true":
        return True
    if t == "false":
        return False
    if _INT_RE.match(t):
        return int(t)
    if _FLOAT_RE.match(t):
        return float(t)
    m = _VEC_RE.match(t)
    if m:
        return Vec3(float(m.group(1)), float(m.group(2)), float(m.group(3)))
    if t.startswith('"'):
        s = unquote_text(t)
        if s is None:
            raise ValueError(f"malformed string literal: {text!r}")
        return check_value(s)
    raise ValueError(f"unparsable value: {text!r}")
