"""Knowledge base: standards documents -> cleaned, chunked, embedded,
persistently stored retrieval units with cosine search and reranking."""

from ranguard.kb.chunking import Chunk, chunk_text
from ranguard.kb.documents import EmptyDocument, SpecDocument, clean, extract
from ranguard.kb.pipeline import ingest_directory, ingest_text
from ranguard.kb.search import (
    EmptyStore,
    RetrievalResult,
    ZeroVector,
    cosine_similarity,
    rerank,
    search,
)
from ranguard.kb.store import (
    EmbeddedChunk,
    EmbeddingProvider,
    KnowledgeStore,
    ProviderError,
    embed_chunks,
)

__all__ = [
    "Chunk",
    "EmbeddedChunk",
    "EmbeddingProvider",
    "EmptyDocument",
    "EmptyStore",
    "KnowledgeStore",
    "ProviderError",
    "RetrievalResult",
    "SpecDocument",
    "ZeroVector",
    "chunk_text",
    "clean",
    "cosine_similarity",
    "embed_chunks",
    "extract",
    "ingest_directory",
    "ingest_text",
    "rerank",
    "search",
]
