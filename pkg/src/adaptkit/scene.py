"""Scene model: the managed element the adaptation effectors write to.

A scene is a flat set of assistance elements (panels, markers, shelves)
with a pose and a handful of adaptable properties. Geometry is limited to
what the adaptations need: Euclidean distance and yaw-only billboarding
(rotate about the vertical y axis to face the user's horizontal position;
forward is +z at yaw 0 and yaw grows toward +x).
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, replace

from ._lines import logical_lines
from .errors import DslSyntaxError, DuplicateId, TypeMismatch, UnknownElement, UnknownProperty
from .values import Vec3, format_float, normalize_yaw, quote_text, unquote_text, values_equal

HORIZONTAL_EPS = 1e-9  # below this horizontal distance, facing is undefined


class DetailLevel(enum.Enum):
    FULL = "full"
    REDUCED = "reduced"


class Modality(enum.Enum):
    VISUAL = "visual"
    AUDIO = "audio"
    VOICE_INPUT = "voice_input"


# canonical rendering order for modality sets
_MODALITY_ORDER = (Modality.VISUAL, Modality.AUDIO, Modality.VOICE_INPUT)

Color = tuple[int, int, int]


def distance(a: Vec3, b: Vec3) -> float:
    return math.sqrt((a.x - b.x) ** 2 + (a.y - b.y) ** 2 + (a.z - b.z) ** 2)


def face_user_yaw(element_pos: Vec3, user_pos: Vec3) -> float | None:
    """Yaw that points an element's forward (+z) axis at the user.

    Works on the horizontal projection only; returns None when the user is
    within HORIZONTAL_EPS of being directly above/below the element.
    """
    dx = user_pos.x - element_pos.x
    dz = user_pos.z - element_pos.z
    if math.sqrt(dx * dx + dz * dz) < HORIZONTAL_EPS:
        return None
    return normalize_yaw(math.atan2(dx, dz))


_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*$")


@dataclass
class SceneElement:
    id: str
    position: Vec3
    yaw: float = 0.0
    visible: bool = True
    text: str = ""
    text_size: float = 14.0
    detail: DetailLevel = DetailLevel.FULL
    modalities: frozenset[Modality] = frozenset({Modality.VISUAL})
    highlight: Color | None = None
    billboard: bool = False


@dataclass(frozen=True)
class PropertyWrite:
    """An applied (non-no-op) write to an element property."""

    element_id: str
    prop: str
    old: object
    new: object
    writer: str


# writable property -> validator/normalizer for incoming values
def _check_bool(v):
    if not isinstance(v, bool):
        raise TypeMismatch("expected bool")
    return v


def _check_text(v):
    if not isinstance(v, str):
        raise TypeMismatch("expected text")
    return v


def _check_size(v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise TypeMismatch("expected a number")
    v = float(v)
    if not (v > 0) or not math.isfinite(v):
        raise TypeMismatch("text_size must be a positive finite number")
    return v


def _check_yaw(v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise TypeMismatch("expected a number")
    return normalize_yaw(float(v))


def _check_detail(v):
    if not isinstance(v, DetailLevel):
        raise TypeMismatch("expected a detail level")
    return v


def _check_modalities(v):
    if not isinstance(v, frozenset) or not v or not all(isinstance(m, Modality) for m in v):
        raise TypeMismatch("expected a non-empty modality set")
    return v


def _check_highlight(v):
    if v is None:
        return v
    if (
        not isinstance(v, tuple)
        or len(v) != 3
        or not all(isinstance(c, int) and not isinstance(c, bool) and 0 <= c <= 255 for c in v)
    ):
        raise TypeMismatch("expected an (r,g,b) color with components in 0..255, or none")
    return v


_WRITABLE = {
    "visible": _check_bool,
    "text": _check_text,
    "text_size": _check_size,
    "yaw": _check_yaw,
    "detail": _check_detail,
    "modality": _check_modalities,
    "highlight": _check_highlight,
    "billboard": _check_bool,
}

# property name -> attribute name on SceneElement
_PROP_ATTR = {p: ("modalities" if p == "modality" else p) for p in _WRITABLE}

# properties readable from DSL expressions, with their expression type
READABLE_PROPS = {
    "position": "vec3",
    "yaw": "float",
    "visible": "bool",
    "text": "text",
    "text_size": "float",
    "billboard": "bool",
}


def render_prop_value(prop: str, value) -> str:
    """Trace rendering of a property value."""
    if prop == "detail":
        return value.value
    if prop == "modality":
        return ",".join(m.value for m in _MODALITY_ORDER if m in value)
    if prop == "highlight":
        return "none" if value is None else f"({value[0]},{value[1]},{value[2]})"
    if prop == "text":
        return quote_text(value)
    if prop in ("text_size", "yaw"):
        return format_float(value)
    if prop == "visible" or prop == "billboard":
        return "true" if value else "false"
    if prop == "position":
        return f"({format_float(value.x)},{format_float(value.y)},{format_float(value.z)})"
    raise UnknownProperty(prop)


def prop_values_equal(a, b) -> bool:
    if isinstance(a, float) and isinstance(b, float):
        return values_equal(a, b)
    return a == b


class SceneModel:
    """Elements keyed by id; iteration is always lexicographic by id."""

    def __init__(self, elements: list[SceneElement] | None = None):
        self._elements: dict[str, SceneElement] = {}
        for e in elements or []:
            self.add_element(e)

    def add_element(self, element: SceneElement) -> None:
        if element.id in self._elements:
            raise DuplicateId(0, f"duplicate element id {element.id!r}")
        self._elements[element.id] = element

    def element(self, element_id: str) -> SceneElement:
        try:
            return self._elements[element_id]
        except KeyError:
            raise UnknownElement(f"no element {element_id!r} in scene") from None

    def has_element(self, element_id: str) -> bool:
        return element_id in self._elements

    def elements(self) -> list[SceneElement]:
        return [self._elements[k] for k in sorted(self._elements)]

    def get_property(self, element_id: str, prop: str):
        el = self.element(element_id)
        if prop == "position":
            return el.position
        if prop not in _PROP_ATTR:
            raise UnknownProperty(f"{element_id} has no property {prop!r}")
        return getattr(el, _PROP_ATTR[prop])

    def write_property(self, element_id: str, prop: str, value, writer: str) -> PropertyWrite | None:
        """Apply a write; returns None (and changes nothing) for no-op writes."""
        el = self.element(element_id)
        if prop not in _WRITABLE:
            raise UnknownProperty(f"{element_id} has no writable property {prop!r}")
        value = _WRITABLE[prop](value)
        old = getattr(el, _PROP_ATTR[prop])
        if prop_values_equal(old, value):
            return None
        setattr(el, _PROP_ATTR[prop], value)
        return PropertyWrite(element_id, prop, old, value, writer)

    def refresh_billboards(self, user_pos: Vec3) -> list[PropertyWrite]:
        """Re-aim every billboard element at the user; skips singular cases."""
        writes = []
        for el in self.elements():
            if not el.billboard:
                continue
            yaw = face_user_yaw(el.position, user_pos)
            if yaw is None:
                continue
            w = self.write_property(el.id, "yaw", yaw, "billboard")
            if w is not None:
                writes.append(w)
        return writes

    def snapshot(self) -> dict[str, SceneElement]:
        """Deep-enough copy of element state for before/after comparisons."""
        return {eid: replace(el) for eid, el in self._elements.items()}


def _parse_bool_token(tok: str, lineno: int) -> bool:
    if tok == "true":
        return True
    if tok == "false":
        return False
    raise DslSyntaxError(lineno, f"expected true/false, got {tok!r}")


_NUM = r"-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?"


def _parse_number_token(tok: str, lineno: int) -> float:
    if re.match(rf"{_NUM}$", tok):
        return float(tok)
    raise DslSyntaxError(lineno, f"expected a number, got {tok!r}")


_VEC_TOKEN_RE = re.compile(rf"\(({_NUM}),({_NUM}),({_NUM})\)$")


def _tokenize_scene_line(line: str, lineno: int) -> list[str]:
    """Split on whitespace but keep quoted strings and (x,y,z) groups whole."""
    tokens = []
    i = 0
    n = len(line)
    while i < n:
        c = line[i]
        if c.isspace():
            i += 1
            continue
        if c == '"':
            j = i + 1
            while j < n:
                if line[j] == "\\":
                    j += 2
                    continue
                if line[j] == '"':
                    break
                j += 1
            if j >= n:
                raise DslSyntaxError(lineno, "unterminated string")
            tokens.append(line[i : j + 1])
            i = j + 1
        elif c == "(":
            j = line.find(")", i)
            if j < 0:
                raise DslSyntaxError(lineno, "unterminated '('")
            tokens.append(line[i : j + 1].replace(" ", ""))
            i = j + 1
        else:
            j = i
            while j < n and not line[j].isspace() and line[j] not in '("':
                j += 1
            tokens.append(line[i:j])
            i = j
    return tokens


def parse_scene(text: str) -> SceneModel:
    """Parse the line-oriented scene format.

    One element per line::

        element <id> at (x,y,z) [yaw <rad>] [visible <bool>] [text "<...>"]
            [text_size <pt>] [detail full|reduced]
            [modality visual|audio|voice_input[,...]] [billboard <bool>]

    Attributes may appear in any order after ``at``; '#' starts a comment.
    """
    scene = SceneModel()
    for lineno, line in logical_lines(text):
        tokens = _tokenize_scene_line(line, lineno)
        if tokens[0] != "element":
            raise DslSyntaxError(lineno, f"expected 'element', got {tokens[0]!r}")
        if len(tokens) < 4 or tokens[2] != "at":
            raise DslSyntaxError(lineno, "expected: element <id> at (x,y,z) ...")
        elem_id = tokens[1]
        if not _IDENT_RE.match(elem_id):
            raise DslSyntaxError(lineno, f"invalid element id: {elem_id!r}")
        m = _VEC_TOKEN_RE.match(tokens[3])
        if not m:
            raise DslSyntaxError(lineno, f"expected position (x,y,z), got {tokens[3]!r}")
        kwargs = {"position": Vec3(float(m.group(1)), float(m.group(2)), float(m.group(3)))}
        i = 4
        seen = set()
        while i < len(tokens):
            attr = tokens[i]
            if attr in seen:
                raise DslSyntaxError(lineno, f"duplicate attribute {attr!r}")
            seen.add(attr)
            if i + 1 >= len(tokens):
                raise DslSyntaxError(lineno, f"attribute {attr!r} needs a value")
            val = tokens[i + 1]
            if attr == "yaw":
                kwargs["yaw"] = normalize_yaw(_parse_number_token(val, lineno))
            elif attr == "visible":
                kwargs["visible"] = _parse_bool_token(val, lineno)
            elif attr == "billboard":
                kwargs["billboard"] = _parse_bool_token(val, lineno)
            elif attr == "text":
                s = unquote_text(val)
                if s is None:
                    raise DslSyntaxError(lineno, "text attribute needs a quoted string")
                kwargs["text"] = s
            elif attr == "text_size":
                size = _parse_number_token(val, lineno)
                if size <= 0:
                    raise DslSyntaxError(lineno, "text_size must be positive")
                kwargs["text_size"] = size
            elif attr == "detail":
                try:
                    kwargs["detail"] = DetailLevel(val)
                except ValueError:
                    raise DslSyntaxError(lineno, f"unknown detail level {val!r}") from None
            elif attr == "modality":
                try:
                    mods = frozenset(Modality(p) for p in val.split(","))
                except ValueError:
                    raise DslSyntaxError(lineno, f"unknown modality in {val!r}") from None
                kwargs["modalities"] = mods
            else:
                raise DslSyntaxError(lineno, f"unknown attribute {attr!r}")
            i += 2
        if scene.has_element(elem_id):
            raise DuplicateId(lineno, f"duplicate element id {elem_id!r}")
        scene.add_element(SceneElement(id=elem_id, **kwargs))
    return scene
