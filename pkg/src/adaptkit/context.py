"""Context store: the knowledge base of monitored features.

Features are namespaced into the three context categories (environment,
user, platform) and hold typed values. A feature's value type is fixed by
its first write; re-setting with a different type is an error, and reading
a feature that was never set is an error rather than a default. The store
tracks which features changed since the last drain so a control loop can
pull deltas, and it can persist a chosen key set to a line-oriented text
format and restore it on a later run.

A store instance belongs to one control loop at a time; values themselves
are immutable, so reads handed to other threads stay safe.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field

from .errors import MalformedStateFile, TypeMismatch, UnknownFeature
from .values import Value, check_value, parse_value, render_value, type_name, values_equal


class ContextCategory(enum.Enum):
    ENVIRONMENT = "env"
    USER = "user"
    PLATFORM = "platform"


class ChangeFlag(enum.Enum):
    CHANGED = "changed"
    UNCHANGED = "unchanged"


_NAME_RE = re.compile(r"[a-z][a-z0-9_]*$")
_PREFIXES = {c.value: c for c in ContextCategory}


@dataclass(frozen=True)
class FeatureId:
    """A context feature, rendered as e.g. ``env.luminance``."""

    category: ContextCategory
    name: str

    def __post_init__(self):
        if not _NAME_RE.match(self.name):
            raise ValueError(f"invalid feature name: {self.name!r}")

    def __str__(self) -> str:
        return f"{self.category.value}.{self.name}"

    @staticmethod
    def parse(text: str) -> "FeatureId":
        """Parse ``env.name`` / ``user.name`` / ``platform.name``."""
        prefix, dot, name = text.partition(".")
        if not dot or prefix not in _PREFIXES or not _NAME_RE.match(name):
            raise ValueError(f"invalid feature id: {text!r}")
        return FeatureId(_PREFIXES[prefix], name)


# FeatureId ordering must follow the rendered id, and enum instances do not
# order by their string value, so sorting always goes through str().
def sorted_ids(ids) -> list[FeatureId]:
    return sorted(ids, key=str)


@dataclass
class ContextStore:
    """Mutable map of features with type stability and change tracking."""

    _values: dict[FeatureId, Value] = field(default_factory=dict)
    _dirty: set[FeatureId] = field(default_factory=set)

    def set_feature(self, feature: FeatureId, value: Value) -> ChangeFlag:
        """Write a feature; the value type is fixed at the first write.

        Returns CHANGED iff the value differs from the prior one (bitwise
        for floats); only changed writes mark the feature dirty.
        """
        check_value(value)
        if feature in self._values:
            prior = self._values[feature]
            if type_name(prior) != type_name(value):
                raise TypeMismatch(
                    f"{feature} holds {type_name(prior)}, cannot set {type_name(value)}"
                )
            if values_equal(prior, value):
                return ChangeFlag.UNCHANGED
        self._values[feature] = value
        self._dirty.add(feature)
        return ChangeFlag.CHANGED

    def get_feature(self, feature: FeatureId) -> Value:
        try:
            return self._values[feature]
        except KeyError:
            raise UnknownFeature(f"feature {feature} was never set") from None

    def has_feature(self, feature: FeatureId) -> bool:
        return feature in self._values

    def keys(self) -> list[FeatureId]:
        return sorted_ids(self._values)

    def drain_dirty(self) -> list[FeatureId]:
        """Return the features changed since the last drain and clear the set.

        Order is lexicographic by rendered id regardless of write order.
        """
        out = sorted_ids(self._dirty)
        self._dirty.clear()
        return out


def save_state(store: ContextStore, keys: list[FeatureId]) -> str:
    """Serialize the given keys as ``id=value`` lines, lexicographic by id.

    Floats use exactly 6 decimals, Vec3 is ``(x,y,z)`` with the same float
    format, and text values are quoted.
    """
    lines = []
    for fid in sorted_ids(keys):
        lines.append(f"{fid}={render_value(store.get_feature(fid))}")
    return "".join(line + "\n" for line in lines)


def load_state(text: str) -> ContextStore:
    """Parse a state file back into a (partial) store."""
    store = ContextStore()
    seen: set[FeatureId] = set()
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\r")
        if not line.strip():
            continue
        key, eq, value_text = line.partition("=")
        if not eq:
            raise MalformedStateFile(f"line {lineno}: missing '=' in {line!r}")
        try:
            fid = FeatureId.parse(key.strip())
        except ValueError as e:
            raise MalformedStateFile(f"line {lineno}: {e}") from None
        if fid in seen:
            raise MalformedStateFile(f"line {lineno}: duplicate key {fid}")
        seen.add(fid)
        try:
            value = parse_value(value_text)
        except (ValueError, TypeMismatch) as e:
            raise MalformedStateFile(f"line {lineno}: {e}") from None
        store.set_feature(fid, value)
    return store
