"""Minimal-change edit application: splice new values into the raw bytes."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from ranguard.gnbconf.parser import ConfigDocument, ConfigNode


class PathNotFound(Exception):
    def __init__(self, path: str):
        super().__init__(f"no setting at path {path!r}")
        self.path = path


class StaleEdit(Exception):
    """The text at an edit's target no longer matches its old_value."""

    def __init__(self, path: str, expected: str, found: str):
        super().__init__(f"stale edit at {path!r}: expected {expected!r}, found {found!r}")
        self.path = path
        self.expected = expected
        self.found = found


@dataclass(frozen=True)
class ConfigEdit:
    path: str
    old_value: str
    new_value: str
    inserted_comment_lines: tuple[str, ...] = ()


def apply_edits(doc: ConfigDocument, edits: Sequence[ConfigEdit]) -> bytes:
    """Apply value replacements; every byte outside the edited value spans
    (plus any inserted comment lines directly above edited settings) is
    carried over unchanged."""
    resolved: list[tuple[ConfigNode, ConfigEdit]] = []
    seen: set[str] = set()
    for edit in edits:
        if edit.path in seen:
            raise StaleEdit(edit.path, edit.old_value, "<already edited in this batch>")
        seen.add(edit.path)
        node = doc.find(edit.path)
        if node is None:
            raise PathNotFound(edit.path)
        start, end = node.value_span
        current = doc.raw[start:end].decode("utf-8")
        if current != edit.old_value:
            raise StaleEdit(edit.path, edit.old_value, current)
        resolved.append((node, edit))

    # Splice back-to-front so earlier spans stay valid.
    resolved.sort(key=lambda pair: pair[0].value_span[0], reverse=True)
    out = doc.raw
    newline = doc.newline_style.value.encode("utf-8")
    for node, edit in resolved:
        start, end = node.value_span
        out = out[:start] + edit.new_value.encode("utf-8") + out[end:]
        if edit.inserted_comment_lines:
            line_start = doc.raw.rfind(b"\n", 0, node.full_span[0]) + 1
            indent = doc.raw[line_start : node.full_span[0]]
            if indent.strip():
                indent = b""
            block = b"".join(
                indent + line.encode("utf-8") + newline
                for line in edit.inserted_comment_lines
            )
            out = out[:line_start] + block + out[line_start:]
    return out
