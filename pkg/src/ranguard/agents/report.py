"""Parsing of assessment reports and reflection feedback.

The assessment agent replies in a sectioned plain-text layout (status
line, numbered sections, optional fenced corrected config); the
reflection agent replies with a strict JSON object. Both parsers are
deliberately unforgiving about the parts later stages depend on.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace
from enum import Enum

from ranguard.gnbconf import ConfigDocument, ParseError, parse_config


class ComplianceStatus(Enum):
    COMPLIANT = "Compliant"
    NON_COMPLIANT = "Non-Compliant"


class ReportParseError(ValueError):
    def __init__(self, message: str, raw_text: str = ""):
        super().__init__(message)
        self.raw_text = raw_text


@dataclass(frozen=True)
class Violation:
    summary: str
    config_path: str


@dataclass(frozen=True)
class SpecReference:
    clause: str
    filename: str


@dataclass(frozen=True)
class ComplianceReport:
    status: ComplianceStatus
    violations: tuple[Violation, ...]
    spec_references: tuple[SpecReference, ...]
    modifications: tuple[str, ...]
    impacts: tuple[str, ...]
    out_of_scope: tuple[str, ...]
    corrected_config: bytes | None
    raw_text: str

    def violation_paths(self) -> frozenset[str]:
        return frozenset(v.config_path for v in self.violations if v.config_path)

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "violations": [{"summary": v.summary, "config_path": v.config_path} for v in self.violations],
            "spec_references": [{"clause": r.clause, "filename": r.filename} for r in self.spec_references],
            "modifications": list(self.modifications),
            "impacts": list(self.impacts),
            "out_of_scope": list(self.out_of_scope),
            "corrected_config": self.corrected_config.decode("utf-8") if self.corrected_config is not None else None,
            "raw_text": self.raw_text,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ComplianceReport":
        corrected = data.get("corrected_config")
        return cls(
            status=ComplianceStatus(data["status"]),
            violations=tuple(Violation(v["summary"], v["config_path"]) for v in data["violations"]),
            spec_references=tuple(SpecReference(r["clause"], r["filename"]) for r in data["spec_references"]),
            modifications=tuple(data["modifications"]),
            impacts=tuple(data["impacts"]),
            out_of_scope=tuple(data["out_of_scope"]),
            corrected_config=corrected.encode("utf-8") if corrected is not None else None,
            raw_text=data["raw_text"],
        )


_STATUS = re.compile(r"compliance\s+status\s*:?\s*\**\s*(non-?\s?compliant|compliant)", re.IGNORECASE)
_FENCE_OPEN = re.compile(r"^```corrected[ \t]*\r?\n", re.MULTILINE)
_FENCE_CLOSE = re.compile(r"^```[ \t]*\r?$", re.MULTILINE)
_ITEM_START = re.compile(r"^\s*\d+(?:[.)]|(?=[A-Z]))\s*")
_BACKTICK_IDENT = re.compile(r"`([A-Za-z_][A-Za-z0-9_.-]*)`")
_FILENAME = re.compile(r"Filename\s*:?\s*`([^`]+)`|Filename\s*:?\s*([^\s`,)]+)", re.IGNORECASE)

_SECTIONS = {
    "violations found": "violations",
    "specification references": "references",
    "recommended code modifications": "modifications",
    "security impact analysis": "impacts",
    "out-of-scope recommendations": "out_of_scope",
}


def _section_key(line: str) -> str | None:
    normalized = line.strip().strip("*# ").rstrip(":").strip().lower()
    return _SECTIONS.get(normalized)


def _numbered_items(lines: list[str]) -> list[str]:
    items: list[str] = []
    current: list[str] = []
    for line in lines:
        if _ITEM_START.match(line):
            if current:
                items.append("\n".join(current).strip())
            current = [ _ITEM_START.sub("", line, count=1).strip() ]
        elif current:
            current.append(line.rstrip())
    if current:
        items.append("\n".join(current).strip())
    return [item for item in items if item]


def _extract_corrected(text: str) -> tuple[bytes | None, str]:
    """Returns (corrected bytes or None, text with the fenced block removed)."""
    opened = _FENCE_OPEN.search(text)
    if opened is None:
        return None, text
    closed = _FENCE_CLOSE.search(text, opened.end())
    if closed is None:
        raise ReportParseError("corrected config fence is never closed", text)
    corrected = text[opened.end() : closed.start()]
    remainder = text[: opened.start()] + text[closed.end() :]
    return corrected.encode("utf-8"), remainder


def parse_report(text: str) -> ComplianceReport:
    """Parse an assessment response into its structured report.

    Raises ReportParseError when the status line is missing, a
    Non-Compliant report lacks a parseable corrected config, or a
    Compliant report carries modifications anyway.
    """
    status_match = _STATUS.search(text)
    if status_match is None:
        raise ReportParseError("no 'Compliance Status:' line found", text)
    token = status_match.group(1).lower()
    status = ComplianceStatus.COMPLIANT if token == "compliant" else ComplianceStatus.NON_COMPLIANT

    corrected, body = _extract_corrected(text)

    sections: dict[str, list[str]] = {name: [] for name in _SECTIONS.values()}
    current: str | None = None
    for line in body.splitlines():
        key = _section_key(line)
        if key is not None:
            current = key
            continue
        if current is not None:
            sections[current].append(line)

    violation_items = _numbered_items(sections["violations"])
    violations = []
    for item in violation_items:
        ident = _BACKTICK_IDENT.search(item)
        violations.append(Violation(summary=item, config_path=ident.group(1) if ident else ""))

    references = []
    for line in sections["references"]:
        stripped = line.strip().lstrip("*").strip()
        if not stripped:
            continue
        match = _FILENAME.search(stripped)
        if match:
            references.append(SpecReference(clause=stripped, filename=match.group(1) or match.group(2)))

    modifications = tuple(_numbered_items(sections["modifications"]))
    impacts = tuple(_numbered_items(sections["impacts"]))
    out_of_scope = tuple(_numbered_items(sections["out_of_scope"]))

    if status is ComplianceStatus.NON_COMPLIANT:
        if corrected is None:
            raise ReportParseError("Non-Compliant report without a ```corrected block", text)
        try:
            parse_config(corrected)
        except ParseError as exc:
            raise ReportParseError(f"corrected config does not parse: {exc}", text) from exc
    else:
        if corrected is not None:
            raise ReportParseError("Compliant report must not carry a corrected config", text)
        if modifications:
            raise ReportParseError("Compliant report must not list modifications", text)

    return ComplianceReport(
        status=status,
        violations=tuple(violations),
        spec_references=tuple(references),
        modifications=modifications,
        impacts=impacts,
        out_of_scope=out_of_scope,
        corrected_config=corrected,
        raw_text=text,
    )


def resolve_violation_paths(report: ComplianceReport, doc: ConfigDocument) -> ComplianceReport:
    """Map field-name hints from the report onto full dotted paths in the
    assessed document (first match in document order wins)."""
    by_name: dict[str, str] = {}
    for path, node in doc.walk():
        by_name.setdefault(node.name, path)
    resolved = []
    for violation in report.violations:
        hint = violation.config_path
        if hint and doc.find(hint) is None and hint in by_name:
            violation = replace(violation, config_path=by_name[hint])
        resolved.append(violation)
    return replace(report, violations=tuple(resolved))


def render_markdown(report: ComplianceReport) -> str:
    """Render a stored report for download, sections in the order the
    assessment agent emits them."""
    lines = [f"Compliance Status: {report.status.value}", ""]

    def section(title: str, items: tuple[str, ...]) -> None:
        if not items:
            return
        lines.append(f"## {title}")
        lines.append("")
        for index, item in enumerate(items, start=1):
            lines.append(f"{index}. {item}")
        lines.append("")

    section("Violations Found", tuple(v.summary for v in report.violations))
    section("Specification References", tuple(r.clause for r in report.spec_references))
    section("Recommended Code Modifications", report.modifications)
    section("Security Impact Analysis", report.impacts)
    section("Out-of-Scope Recommendations", report.out_of_scope)
    if report.corrected_config is not None:
        corrected = report.corrected_config.decode("utf-8")
        if not corrected.endswith("\n"):
            corrected += "\n"
        lines.append("## Corrected Configuration")
        lines.append("")
        lines.append("```corrected")
        lines.append(corrected.rstrip("\n"))
        lines.append("```")
        lines.append("")
    return "\n".join(lines)


# -- reflection feedback -----------------------------------------------------


class IssueType(Enum):
    MISSED_VIOLATION = "MissedViolation"
    INCORRECT_CITATION = "IncorrectCitation"
    OVER_CHANGE = "OverChange"
    UNDER_CHANGE = "UnderChange"
    FORMATTING_CHANGE = "FormattingChange"
    INCOMPLETE_OUTPUT = "IncompleteOutput"
    SCOPE_ERROR = "ScopeError"
    OTHER = "Other"


class FeedbackParseError(ValueError):
    def __init__(self, message: str, raw_text: str = ""):
        super().__init__(message)
        self.raw_text = raw_text


@dataclass(frozen=True)
class ReflectionIssue:
    id: str
    type: IssueType
    description: str
    required_action: str


@dataclass(frozen=True)
class ReflectionFeedback:
    overall_assessment: str
    issues: tuple[ReflectionIssue, ...]
    must_fix_summary: tuple[str, ...]

    def converged(self) -> bool:
        return not self.issues and not self.must_fix_summary

    def to_dict(self) -> dict:
        """Serialize back to the strict feedback schema (used verbatim when
        injecting 'Previous Reflection Feedback' into the next assessment)."""
        return {
            "OverallAssessment": self.overall_assessment,
            "Issues": [
                {
                    "id": issue.id,
                    "type": issue.type.value,
                    "description": issue.description,
                    "required_action": issue.required_action,
                }
                for issue in self.issues
            ],
            "MustFixSummary": list(self.must_fix_summary),
        }


_JSON_FENCE = re.compile(r"^```(?:json)?\s*\n(.*)\n```\s*$", re.DOTALL)


def parse_reflection(text: str) -> ReflectionFeedback:
    stripped = text.strip()
    fenced = _JSON_FENCE.match(stripped)
    if fenced:
        stripped = fenced.group(1).strip()
    try:
        data = json.loads(stripped)
    except json.JSONDecodeError as exc:
        raise FeedbackParseError(f"reflection output is not valid JSON: {exc}", text) from exc
    if not isinstance(data, dict):
        raise FeedbackParseError("reflection output is not a JSON object", text)
    for key in ("OverallAssessment", "Issues", "MustFixSummary"):
        if key not in data:
            raise FeedbackParseError(f"reflection output is missing {key!r}", text)
    if not isinstance(data["Issues"], list) or not isinstance(data["MustFixSummary"], list):
        raise FeedbackParseError("Issues and MustFixSummary must be lists", text)

    issues: list[ReflectionIssue] = []
    seen_ids: set[str] = set()
    for index, entry in enumerate(data["Issues"]):
        if not isinstance(entry, dict):
            raise FeedbackParseError(f"issue {index} is not an object", text)
        try:
            issue_id = str(entry["id"])
            raw_type = str(entry["type"])
            description = str(entry["description"])
        except KeyError as exc:
            raise FeedbackParseError(f"issue {index} is missing {exc}", text) from exc
        if issue_id in seen_ids:
            raise FeedbackParseError(f"duplicate issue id {issue_id!r}", text)
        seen_ids.add(issue_id)
        try:
            issue_type = IssueType(raw_type)
        except ValueError:
            issue_type = IssueType.OTHER
            description = f"({raw_type}) {description}"
        issues.append(
            ReflectionIssue(
                id=issue_id,
                type=issue_type,
                description=description,
                required_action=str(entry.get("required_action", "")),
            )
        )
    return ReflectionFeedback(
        overall_assessment=str(data["OverallAssessment"]),
        issues=tuple(issues),
        must_fix_summary=tuple(str(item) for item in data["MustFixSummary"]),
    )
