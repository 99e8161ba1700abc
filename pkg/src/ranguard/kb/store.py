"""Embedded-chunk store: ingestion, persistence, integrity checking."""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Protocol, Sequence

import numpy as np

from ranguard.common import CorruptStore, DimensionMismatch, VersionMismatch, sha256_hex
from ranguard.kb.chunking import Chunk

STORE_FORMAT_VERSION = 1


class ProviderError(Exception):
    """An embedding or chat provider failed."""


class EmbeddingProvider(Protocol):
    embedder_id: str
    dimension: int

    def embed(self, texts: Sequence[str]) -> np.ndarray: ...


@dataclass
class EmbeddedChunk:
    chunk: Chunk
    vector: np.ndarray
    embedder_id: str
    stale: bool = False
    source: str = "corpus"


def normalize(vector: np.ndarray) -> np.ndarray:
    from ranguard.kb.search import ZeroVector  # local import, avoids a cycle

    v = np.asarray(vector, dtype=np.float64)
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise ZeroVector("cannot normalize a zero vector")
    return v / norm


def embed_chunks(chunks: Sequence[Chunk], provider: EmbeddingProvider, batch_size: int = 64) -> list[EmbeddedChunk]:
    """One L2-normalized vector per chunk, requested in batches."""
    out: list[EmbeddedChunk] = []
    for offset in range(0, len(chunks), batch_size):
        batch = chunks[offset : offset + batch_size]
        vectors = np.asarray(provider.embed([c.text for c in batch]), dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[0] != len(batch):
            raise ProviderError(
                f"provider returned {vectors.shape} for a batch of {len(batch)} texts"
            )
        if vectors.shape[1] != provider.dimension:
            raise DimensionMismatch(
                f"provider {provider.embedder_id} returned dimension {vectors.shape[1]}, "
                f"expected {provider.dimension}"
            )
        if not np.isfinite(vectors).all():
            raise ProviderError("provider returned NaN or Inf vector components")
        for chunk, vector in zip(batch, vectors):
            out.append(EmbeddedChunk(chunk=chunk, vector=normalize(vector), embedder_id=provider.embedder_id))
    return out


@dataclass
class KnowledgeStore:
    dimension: int
    embedder_id: str
    entries: dict[tuple[str, int], EmbeddedChunk] = field(default_factory=dict)
    path: Path | None = None

    def __len__(self) -> int:
        return len(self.entries)

    def add(self, embedded: Iterable[EmbeddedChunk]) -> int:
        count = 0
        for entry in embedded:
            if entry.embedder_id != self.embedder_id:
                raise DimensionMismatch(
                    f"store uses embedder {self.embedder_id!r}, entry uses {entry.embedder_id!r}"
                )
            if entry.vector.shape != (self.dimension,):
                raise DimensionMismatch(
                    f"entry dimension {entry.vector.shape} does not match store dimension {self.dimension}"
                )
            self.entries[entry.chunk.chunk_id] = entry
            count += 1
        return count

    def replace_document(self, filename: str, embedded: Iterable[EmbeddedChunk]) -> int:
        self.drop_document(filename)
        return self.add(embedded)

    def drop_document(self, filename: str) -> None:
        for key in [k for k in self.entries if k[0] == filename]:
            del self.entries[key]

    def mark_stale(self, filename: str) -> int:
        count = 0
        for key, entry in self.entries.items():
            if key[0] == filename and not entry.stale:
                entry.stale = True
                count += 1
        return count

    def active_entries(self, include_feedback: bool = True) -> list[EmbeddedChunk]:
        entries = [
            e
            for e in self.entries.values()
            if not e.stale and (include_feedback or e.source != "feedback")
        ]
        entries.sort(key=lambda e: e.chunk.chunk_id)
        return entries

    def filenames(self) -> set[str]:
        return {key[0] for key in self.entries}

    # -- persistence ------------------------------------------------------

    def persist(self, path: Path | str | None = None) -> Path:
        """Write header + sorted records; the header checksum covers the
        record bytes so truncation and tampering are detectable on load."""
        target = Path(path) if path is not None else self.path
        if target is None:
            raise ValueError("no persistence path configured")
        record_lines: list[bytes] = []
        for key in sorted(self.entries):
            entry = self.entries[key]
            record = {
                "filename": entry.chunk.filename,
                "ordinal": entry.chunk.ordinal,
                "char_range": list(entry.chunk.char_range),
                "text": entry.chunk.text,
                "vector": base64.b64encode(np.asarray(entry.vector, dtype=np.float64).tobytes()).decode("ascii"),
                "stale": entry.stale,
                "source": entry.source,
            }
            record_lines.append(json.dumps(record, sort_keys=True, ensure_ascii=True).encode("utf-8") + b"\n")
        body = b"".join(record_lines)
        header = {
            "version": STORE_FORMAT_VERSION,
            "dimension": self.dimension,
            "embedder_id": self.embedder_id,
            "count": len(record_lines),
            "checksum": sha256_hex(body),
        }
        target.parent.mkdir(parents=True, exist_ok=True)
        with open(target, "wb") as fh:
            fh.write(json.dumps(header, sort_keys=True, ensure_ascii=True).encode("utf-8") + b"\n")
            fh.write(body)
        self.path = target
        return target

    @classmethod
    def load(cls, path: Path | str) -> "KnowledgeStore":
        target = Path(path)
        data = target.read_bytes()
        newline = data.find(b"\n")
        if newline < 0:
            raise CorruptStore(f"{target}: missing header line")
        try:
            header = json.loads(data[:newline])
        except json.JSONDecodeError as exc:
            raise CorruptStore(f"{target}: unreadable header: {exc}") from exc
        if header.get("version") != STORE_FORMAT_VERSION:
            raise VersionMismatch(
                f"{target}: format version {header.get('version')}, expected {STORE_FORMAT_VERSION}"
            )
        body = data[newline + 1 :]
        if sha256_hex(body) != header.get("checksum"):
            raise CorruptStore(f"{target}: checksum mismatch")
        lines = body.splitlines()
        if len(lines) != header.get("count"):
            raise CorruptStore(f"{target}: expected {header.get('count')} records, found {len(lines)}")
        store = cls(dimension=int(header["dimension"]), embedder_id=str(header["embedder_id"]), path=target)
        for line in lines:
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorruptStore(f"{target}: unreadable record: {exc}") from exc
            vector = np.frombuffer(base64.b64decode(record["vector"]), dtype=np.float64)
            if vector.shape != (store.dimension,):
                raise CorruptStore(f"{target}: record vector has dimension {vector.shape[0]}")
            chunk = Chunk(
                filename=record["filename"],
                ordinal=int(record["ordinal"]),
                text=record["text"],
                char_range=tuple(record["char_range"]),
            )
            store.entries[chunk.chunk_id] = EmbeddedChunk(
                chunk=chunk,
                vector=vector,
                embedder_id=store.embedder_id,
                stale=bool(record.get("stale", False)),
                source=str(record.get("source", "corpus")),
            )
        return store
