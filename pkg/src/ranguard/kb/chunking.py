"""Overlapping chunking of cleaned documents for retrieval."""

from __future__ import annotations

import re
from dataclasses import dataclass

from ranguard.kb.documents import SpecDocument

_SENTENCE_END = re.compile(r"[.!?][\"')\]]*\s")


@dataclass(frozen=True)
class Chunk:
    filename: str
    ordinal: int
    text: str
    char_range: tuple[int, int]

    @property
    def chunk_id(self) -> tuple[str, int]:
        return (self.filename, self.ordinal)


def _pick_split(content: str, lo: int, hi: int) -> int:
    """Best split position in [lo, hi]: paragraph break, then sentence end,
    then line break, then word break, then a hard cut at hi."""
    window = content[lo - 2 if lo >= 2 else 0 : hi]
    base = lo - 2 if lo >= 2 else 0

    para = content.rfind("\n\n", base, hi)
    if para >= 0 and lo <= para + 2 <= hi:
        return para + 2

    best = -1
    for match in _SENTENCE_END.finditer(content, base, hi):
        if lo <= match.end() <= hi:
            best = match.end()
    if best >= 0:
        return best

    line = content.rfind("\n", lo, hi)
    if line >= 0 and lo <= line + 1 <= hi:
        return line + 1

    space = content.rfind(" ", lo, hi)
    if space >= 0 and lo <= space + 1 <= hi:
        return space + 1
    return hi


def chunk_text(doc: SpecDocument, max_chars: int = 1000, overlap_chars: int = 100) -> list[Chunk]:
    """Split content into chunks of at most max_chars characters.

    Consecutive chunks share exactly overlap_chars characters, so
    concatenating each chunk minus its leading overlap reconstructs the
    content; split points prefer paragraph and sentence boundaries in the
    upper half of the size budget.
    """
    if not max_chars > overlap_chars >= 0:
        raise ValueError("require max_chars > overlap_chars >= 0")
    content = doc.content
    if not content:
        return []

    chunks: list[Chunk] = []
    start = 0
    ordinal = 0
    while True:
        remaining = len(content) - start
        if remaining <= max_chars:
            end = len(content)
        else:
            lo = start + max(max_chars // 2, overlap_chars + 1)
            hi = start + max_chars
            end = _pick_split(content, min(lo, hi), hi)
        chunks.append(
            Chunk(
                filename=doc.filename,
                ordinal=ordinal,
                text=content[start:end],
                char_range=(start, end),
            )
        )
        if end >= len(content):
            break
        ordinal += 1
        start = end - overlap_chars
    return chunks
