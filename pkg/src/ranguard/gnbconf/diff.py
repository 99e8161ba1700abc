"""Line-level diffing of config texts and minimal-change verification."""

from __future__ import annotations

import difflib
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable

from ranguard.gnbconf.parser import ConfigDocument, parse_config

if TYPE_CHECKING:
    from ranguard.agents.report import ComplianceReport


@dataclass(frozen=True)
class ConfigDiff:
    """Changed byte regions (original range, edited range) plus the dotted
    paths of the groups those changes fall inside."""

    changed_regions: tuple[tuple[tuple[int, int], tuple[int, int]], ...]
    touched_group_paths: frozenset[str]

    @property
    def is_empty(self) -> bool:
        return not self.changed_regions


@dataclass(frozen=True)
class MinimalChangeVerdict:
    passed: bool
    offending_paths: tuple[str, ...] = ()


def _line_offsets(raw: bytes) -> tuple[list[bytes], list[int]]:
    lines = raw.splitlines(keepends=True)
    offsets = [0]
    for line in lines:
        offsets.append(offsets[-1] + len(line))
    return lines, offsets


def _attribute_lines(doc: ConfigDocument, offsets: list[int], lines: list[bytes], lo: int, hi: int) -> set[str]:
    paths: set[str] = set()
    for idx in range(lo, hi):
        stripped = lines[idx].lstrip(b" \t")
        offset = offsets[idx] + (len(lines[idx]) - len(stripped))
        path = doc.attribution_path(min(offset, max(len(doc.raw) - 1, 0)))
        paths.add(path if path is not None else "")
    return paths


def diff_configs(original: bytes | str, edited: bytes | str) -> ConfigDiff:
    """LCS diff at line granularity; parse errors propagate."""
    original_doc = parse_config(original)
    edited_doc = parse_config(edited)
    o_lines, o_offsets = _line_offsets(original_doc.raw)
    e_lines, e_offsets = _line_offsets(edited_doc.raw)

    matcher = difflib.SequenceMatcher(a=o_lines, b=e_lines, autojunk=False)
    regions: list[tuple[tuple[int, int], tuple[int, int]]] = []
    touched: set[str] = set()
    for tag, i1, i2, j1, j2 in matcher.get_opcodes():
        if tag == "equal":
            continue
        regions.append(((o_offsets[i1], o_offsets[i2]), (e_offsets[j1], e_offsets[j2])))
        touched |= _attribute_lines(original_doc, o_offsets, o_lines, i1, i2)
        touched |= _attribute_lines(edited_doc, e_offsets, e_lines, j1, j2)
    return ConfigDiff(changed_regions=tuple(regions), touched_group_paths=frozenset(touched))


def _encloses(group_path: str, violation_paths: Iterable[str]) -> bool:
    if not group_path:
        return False
    for path in violation_paths:
        if path == group_path or path.startswith(group_path + "."):
            return True
    return False


def verify_minimal_change(diff: ConfigDiff, report: "ComplianceReport") -> MinimalChangeVerdict:
    """Pass iff every touched group contains at least one reported violation."""
    violation_paths = [v.config_path for v in report.violations if v.config_path]
    offending = [
        path if path else "<document>"
        for path in sorted(diff.touched_group_paths)
        if not _encloses(path, violation_paths)
    ]
    return MinimalChangeVerdict(passed=not offending, offending_paths=tuple(offending))
