"""Standards document extraction and cleaning."""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from datetime import datetime
from typing import Callable, Sequence

from ranguard.common import sha256_hex, utc_now


class EmptyDocument(ValueError):
    """The input contains no usable text."""


@dataclass(frozen=True)
class SpecDocument:
    doc_id: str
    filename: str
    source_path_or_url: str
    content: str
    content_hash: str
    ingested_at: datetime


_TABLE_ROW = re.compile(r"^\s*\|.*\|\s*$")
_TABLE_SEPARATOR = re.compile(r"^\s*\|[\s:|-]+\|\s*$")


def _split_cells(line: str) -> list[str]:
    return [cell.strip() for cell in line.strip().strip("|").split("|")]


def _linearize_tables(text: str) -> str:
    """Rewrite markdown tables row-wise: each data row becomes one
    "header: cell; header: cell" line so chunking never splits a record."""
    lines = text.splitlines()
    out: list[str] = []
    i = 0
    while i < len(lines):
        is_table = (
            i + 1 < len(lines)
            and _TABLE_ROW.match(lines[i])
            and _TABLE_SEPARATOR.match(lines[i + 1])
        )
        if not is_table:
            out.append(lines[i])
            i += 1
            continue
        headers = _split_cells(lines[i])
        i += 2
        while i < len(lines) and _TABLE_ROW.match(lines[i]):
            cells = _split_cells(lines[i])
            pairs = [
                f"{header}: {cell}"
                for header, cell in zip(headers, cells)
                if cell
            ]
            out.append("; ".join(pairs))
            i += 1
    trailing = "\n" if text.endswith("\n") else ""
    return "\n".join(out) + trailing


def extract(raw: str, filename: str, source: str = "", now: Callable[[], datetime] = utc_now) -> SpecDocument:
    """Turn raw text or markdown into a document with retrieval metadata."""
    if not raw.strip():
        raise EmptyDocument(f"{filename}: no text content")
    content = _linearize_tables(raw)
    return SpecDocument(
        doc_id=sha256_hex(f"{filename}\n{content}")[:16],
        filename=filename,
        source_path_or_url=source or filename,
        content=content,
        content_hash=sha256_hex(content),
        ingested_at=now(),
    )


def clean(doc: SpecDocument, boilerplate_patterns: Sequence[str] = ()) -> SpecDocument:
    """Strip configured header/footer lines and collapse runs of more than
    two blank lines down to one. Idempotent."""
    compiled = [re.compile(p) for p in boilerplate_patterns]
    kept: list[str] = []
    blanks = 0
    for line in doc.content.splitlines():
        if any(p.search(line) for p in compiled):
            continue
        if line.strip():
            if blanks:
                kept.extend([""] * (1 if blanks > 2 else blanks))
            blanks = 0
            kept.append(line)
        else:
            blanks += 1
    if blanks:
        kept.extend([""] * (1 if blanks > 2 else blanks))
    content = "\n".join(kept)
    if doc.content.endswith("\n") and content and not content.endswith("\n"):
        content += "\n"
    if content == doc.content:
        return doc
    return replace(doc, content=content, content_hash=sha256_hex(content))
