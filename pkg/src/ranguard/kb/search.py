"""Cosine-similarity search over the store with deterministic reranking."""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from ranguard.common import DimensionMismatch
from ranguard.kb.chunking import Chunk
from ranguard.kb.store import EmbeddingProvider, KnowledgeStore, normalize


class ZeroVector(ValueError):
    """Cosine similarity is undefined for a zero-norm vector."""


class EmptyStore(Exception):
    """Search was attempted against a store with no active entries."""


_TOKEN = re.compile(r"[a-z0-9]+")


@dataclass(frozen=True)
class RetrievalResult:
    chunk: Chunk
    cosine_score: float
    rerank_score: float
    rank: int


def cosine_similarity(a: Sequence[float] | np.ndarray, b: Sequence[float] | np.ndarray) -> float:
    va = np.asarray(a, dtype=np.float64)
    vb = np.asarray(b, dtype=np.float64)
    if va.shape != vb.shape:
        raise DimensionMismatch(f"vector dimensions differ: {va.shape} vs {vb.shape}")
    norm_a = float(np.linalg.norm(va))
    norm_b = float(np.linalg.norm(vb))
    if norm_a == 0.0 or norm_b == 0.0:
        raise ZeroVector("cosine similarity of a zero vector")
    return float(np.dot(va, vb) / (norm_a * norm_b))


# Scores that agree to 9 decimals count as tied; the tie-break is the chunk
# id, which keeps rankings stable across BLAS builds and re-implementations.
RANK_SCORE_DECIMALS = 9


def search(store: KnowledgeStore, query: str, k: int, provider: EmbeddingProvider, include_feedback: bool = True) -> list[RetrievalResult]:
    """Exhaustive top-k by cosine score; ties (after rounding the score to
    RANK_SCORE_DECIMALS) break by ascending chunk id.

    Stored vectors are unit-norm, so the cosine reduces to a dot product
    against the normalized query embedding.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    entries = store.active_entries(include_feedback=include_feedback)
    if not entries:
        raise EmptyStore("knowledge store has no active entries")
    query_vector = normalize(np.asarray(provider.embed([query]), dtype=np.float64)[0])
    if query_vector.shape != (store.dimension,):
        raise DimensionMismatch(
            f"query embedding dimension {query_vector.shape[0]} != store dimension {store.dimension}"
        )
    matrix = np.vstack([e.vector for e in entries])
    scores = matrix @ query_vector
    order = sorted(
        range(len(entries)),
        key=lambda i: (-round(float(scores[i]), RANK_SCORE_DECIMALS), entries[i].chunk.chunk_id),
    )
    results = []
    for rank, idx in enumerate(order[:k], start=1):
        score = float(scores[idx])
        results.append(
            RetrievalResult(chunk=entries[idx].chunk, cosine_score=score, rerank_score=score, rank=rank)
        )
    return results


def _tokens(text: str) -> set[str]:
    return set(_TOKEN.findall(text.lower()))


def rerank(results: Sequence[RetrievalResult], context: str, top_n: int) -> list[RetrievalResult]:
    """Blend cosine with a lexical-overlap score against ``context``.

    The lexical score of a candidate is the summed inverse document
    frequency (over the candidate set) of tokens it shares with the
    context, normalized by the best candidate; the blend is
    0.5*cosine + 0.5*normalized lexical. Deterministic, and stable on its
    own output.
    """
    if top_n > len(results):
        raise ValueError("top_n exceeds the number of candidates")
    head, tail = list(results[:top_n]), list(results[top_n:])
    if head:
        context_tokens = _tokens(context)
        candidate_tokens = [_tokens(r.chunk.text) for r in head]
        df = Counter(token for tokens in candidate_tokens for token in tokens)
        n = len(head)
        raw = [
            sum(math.log(n / df[t]) for t in tokens & context_tokens)
            for tokens in candidate_tokens
        ]
        best = max(raw)
        blended = [
            0.5 * r.cosine_score + 0.5 * (value / best if best > 0 else 0.0)
            for r, value in zip(head, raw)
        ]
        order = sorted(
            range(len(head)),
            key=lambda i: (-blended[i], -head[i].cosine_score, head[i].chunk.chunk_id),
        )
        head = [replace(head[i], rerank_score=blended[i]) for i in order]
    out = head + tail
    return [replace(r, rank=i) for i, r in enumerate(out, start=1)]
