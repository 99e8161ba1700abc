"""End-to-end ingestion: extract -> clean -> chunk -> embed -> store."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Sequence

from ranguard.kb.chunking import chunk_text
from ranguard.kb.documents import clean, extract
from ranguard.kb.store import EmbeddingProvider, KnowledgeStore, embed_chunks

logger = logging.getLogger(__name__)

CORPUS_SUFFIXES = (".txt", ".md")


def ingest_text(
    store: KnowledgeStore,
    raw: str,
    filename: str,
    provider: EmbeddingProvider,
    *,
    source: str = "",
    max_chars: int = 1000,
    overlap_chars: int = 100,
    boilerplate_patterns: Sequence[str] = (),
    origin: str = "corpus",
) -> int:
    """Ingest one document, replacing any previous chunks for its filename."""
    doc = clean(extract(raw, filename, source=source), boilerplate_patterns)
    chunks = chunk_text(doc, max_chars=max_chars, overlap_chars=overlap_chars)
    embedded = embed_chunks(chunks, provider)
    for entry in embedded:
        entry.source = origin
    count = store.replace_document(filename, embedded)
    logger.info("ingested %s: %d chunks", filename, count)
    return count


def ingest_directory(
    store: KnowledgeStore,
    directory: Path | str,
    provider: EmbeddingProvider,
    *,
    max_chars: int = 1000,
    overlap_chars: int = 100,
    boilerplate_patterns: Sequence[str] = (),
) -> int:
    """Ingest every .txt/.md file in a directory; returns total chunk count."""
    root = Path(directory)
    total = 0
    for path in sorted(root.iterdir()):
        if path.suffix.lower() not in CORPUS_SUFFIXES or not path.is_file():
            continue
        total += ingest_text(
            store,
            path.read_text(encoding="utf-8"),
            path.name,
            provider,
            source=str(path),
            max_chars=max_chars,
            overlap_chars=overlap_chars,
            boilerplate_patterns=boilerplate_patterns,
        )
    return total
