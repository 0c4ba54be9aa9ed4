"""Shared helpers for the line-oriented file formats."""

from __future__ import annotations


def strip_comment(line: str) -> str:
    """Remove a '#' comment, ignoring '#' inside double-quoted strings."""
    in_string = False
    i = 0
    n = len(line)
    while i < n:
        c = line[i]
        if in_string:
            if c == "\\":
                i += 1
            elif c == '"':
                in_string = False
        elif c == '"':
            in_string = True
        elif c == "#":
            return line[:i]
        i += 1
    return line


def logical_lines(text: str):
    """Yield (1-based line number, stripped content) for non-empty lines."""
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = strip_comment(raw).strip()
        if line:
            yield lineno, line
