"""Chat and embedding model providers.

One uniform surface over hosted HTTP endpoints, deterministic scripted
providers for tests, and a transcript recorder/replayer so whole agent
runs can be reproduced offline with zero network traffic.
"""

from __future__ import annotations

import json
import logging
import os
import re
import time
from dataclasses import dataclass, field
from hashlib import blake2b
from pathlib import Path
from typing import Callable, Protocol, Sequence

import numpy as np

from ranguard.common import CorruptStore, DimensionMismatch, canonical_json, sha256_hex

logger = logging.getLogger(__name__)


class ProviderError(Exception):
    pass


class AuthError(ProviderError):
    pass


class RateLimited(ProviderError):
    pass


class ProviderTimeout(ProviderError):
    pass


class MalformedResponse(ProviderError):
    pass


class MissingTranscript(ProviderError):
    """Replay mode has no recorded exchange for this request."""


@dataclass(frozen=True)
class Message:
    role: str  # system | user | assistant | tool
    content: str


@dataclass(frozen=True)
class ProviderConfig:
    base_url: str
    model_name: str
    api_key_env: str = ""
    timeout_s: float = 60.0
    temperature: float = 0.0
    max_retries: int = 3

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.timeout_s <= 0:
            raise ValueError("timeout must be > 0")


@dataclass
class ChatExchange:
    messages: tuple[Message, ...]
    response_text: str
    latency_s: float
    token_usage: dict | None = None


class ChatProvider(Protocol):
    model_name: str

    def chat(self, messages: Sequence[Message]) -> ChatExchange: ...


def request_payload(model_name: str, messages: Sequence[Message]) -> str:
    return canonical_json(
        {"model": model_name, "messages": [{"role": m.role, "content": m.content} for m in messages]}
    )


def fingerprint(model_name: str, messages: Sequence[Message]) -> str:
    return sha256_hex(request_payload(model_name, messages))


# -- live HTTP provider ----------------------------------------------------

_RETRYABLE_STATUS = frozenset({429, 500, 502, 503, 504})


def _default_transport(config: ProviderConfig) -> Callable[[dict], tuple[int, dict]]:
    import httpx

    def post(body: dict) -> tuple[int, dict]:
        headers = {"content-type": "application/json"}
        if config.api_key_env:
            key = os.environ.get(config.api_key_env, "")
            if not key:
                raise AuthError(f"environment variable {config.api_key_env} is not set")
            headers["authorization"] = f"Bearer {key}"
        try:
            response = httpx.post(config.base_url, json=body, headers=headers, timeout=config.timeout_s)
        except httpx.TimeoutException as exc:
            raise TimeoutError(str(exc)) from exc
        try:
            payload = response.json()
        except ValueError:
            payload = {}
        return response.status_code, payload

    return post


def _call_with_retries(
    config: ProviderConfig,
    transport: Callable[[dict], tuple[int, dict]],
    body: dict,
    sleep: Callable[[float], None],
) -> dict:
    last_error: Exception | None = None
    for attempt in range(config.max_retries + 1):
        if attempt:
            sleep(min(0.5 * 2 ** (attempt - 1), 8.0))
        try:
            status, payload = transport(body)
        except AuthError:
            raise
        except TimeoutError as exc:
            last_error = ProviderTimeout(str(exc))
            continue
        except Exception as exc:  # transport-level failure: retryable
            last_error = ProviderError(f"transport failure: {exc}")
            continue
        if status in (401, 403):
            raise AuthError(f"endpoint returned HTTP {status}")
        if status in _RETRYABLE_STATUS:
            last_error = RateLimited(f"HTTP {status}") if status == 429 else ProviderError(f"HTTP {status}")
            continue
        if status != 200:
            raise ProviderError(f"HTTP {status}: {payload}")
        return payload
    raise last_error if last_error is not None else ProviderError("request failed")


class HttpChatProvider:
    """POST {model, messages, temperature}; reads the first choice's message."""

    def __init__(
        self,
        config: ProviderConfig,
        transport: Callable[[dict], tuple[int, dict]] | None = None,
        sleep: Callable[[float], None] = time.sleep,
        clock: Callable[[], float] = time.perf_counter,
    ):
        self.config = config
        self.model_name = config.model_name
        self._transport = transport or _default_transport(config)
        self._sleep = sleep
        self._clock = clock

    def chat(self, messages: Sequence[Message]) -> ChatExchange:
        body = {
            "model": self.config.model_name,
            "messages": [{"role": m.role, "content": m.content} for m in messages],
            "temperature": self.config.temperature,
        }
        started = self._clock()
        payload = _call_with_retries(self.config, self._transport, body, self._sleep)
        latency = self._clock() - started
        try:
            text = payload["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise MalformedResponse(f"no message content in response: {payload!r}") from exc
        if not isinstance(text, str):
            raise MalformedResponse(f"message content is not text: {text!r}")
        return ChatExchange(
            messages=tuple(messages),
            response_text=text,
            latency_s=latency,
            token_usage=payload.get("usage"),
        )


class HttpEmbeddingProvider:
    """POST {model, input}; reads data[*].embedding."""

    def __init__(
        self,
        config: ProviderConfig,
        dimension: int = 1536,
        transport: Callable[[dict], tuple[int, dict]] | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.config = config
        self.dimension = dimension
        self.embedder_id = f"http-{config.model_name}-{dimension}"
        self._transport = transport or _default_transport(config)
        self._sleep = sleep

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        if not texts:
            raise ValueError("no texts to embed")
        body = {"model": self.config.model_name, "input": list(texts)}
        payload = _call_with_retries(self.config, self._transport, body, self._sleep)
        try:
            rows = [item["embedding"] for item in payload["data"]]
        except (KeyError, TypeError) as exc:
            raise MalformedResponse(f"no embeddings in response: {payload!r}") from exc
        vectors = np.asarray(rows, dtype=np.float64)
        if vectors.shape != (len(texts), self.dimension):
            raise DimensionMismatch(
                f"endpoint returned shape {vectors.shape}, expected ({len(texts)}, {self.dimension})"
            )
        return vectors


# -- deterministic offline providers ---------------------------------------


class ScriptedChatProvider:
    """Responds from an in-process function; used by tests and fixtures."""

    def __init__(self, model_name: str, respond: Callable[[Sequence[Message]], str], latency_s: float = 0.0):
        self.model_name = model_name
        self._respond = respond
        self.latency_s = latency_s
        self.calls = 0

    def chat(self, messages: Sequence[Message]) -> ChatExchange:
        self.calls += 1
        return ChatExchange(
            messages=tuple(messages),
            response_text=self._respond(messages),
            latency_s=self.latency_s,
        )


_WORD = re.compile(r"[a-z0-9]+")


class MockHashEmbedder:
    """Seeded hash-of-token-ngrams embedding: deterministic across processes,
    identical texts map to identical unit vectors."""

    def __init__(self, dimension: int = 256, seed: int = 7):
        self.dimension = dimension
        self.seed = seed
        self.embedder_id = f"hash-ngram-{dimension}-s{seed}"

    def _vector(self, text: str) -> np.ndarray:
        tokens = _WORD.findall(text.lower())
        grams = tokens + [f"{a} {b}" for a, b in zip(tokens, tokens[1:])]
        if not grams:
            grams = ["<empty>"]
        v = np.zeros(self.dimension, dtype=np.float64)
        for gram in grams:
            digest = blake2b(f"{self.seed}|{gram}".encode("utf-8"), digest_size=8).digest()
            value = int.from_bytes(digest, "big")
            sign = 1.0 if value & 1 else -1.0
            v[(value >> 1) % self.dimension] += sign
        norm = float(np.linalg.norm(v))
        if norm == 0.0:
            v[self.seed % self.dimension] = 1.0
            norm = 1.0
        return v / norm

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        if not texts:
            raise ValueError("no texts to embed")
        return np.vstack([self._vector(t) for t in texts])


# -- transcripts ------------------------------------------------------------


@dataclass(frozen=True)
class TranscriptRecord:
    fingerprint: str
    request: str  # the canonical payload the fingerprint digests
    response_text: str
    latency_ms: float


@dataclass
class Transcript:
    records: dict[str, TranscriptRecord] = field(default_factory=dict)
    order: list[str] = field(default_factory=list)

    def add(self, record: TranscriptRecord) -> None:
        existing = self.records.get(record.fingerprint)
        if existing is not None:
            if existing.response_text != record.response_text:
                raise ValueError(
                    f"fingerprint collision with different responses: {record.fingerprint}"
                )
            return
        self.records[record.fingerprint] = record
        self.order.append(record.fingerprint)

    def save(self, path: Path | str) -> Path:
        target = Path(path)
        lines = [
            json.dumps(
                {
                    "fingerprint": r.fingerprint,
                    "request": r.request,
                    "response_text": r.response_text,
                    "latency_ms": r.latency_ms,
                },
                sort_keys=True,
                ensure_ascii=True,
            ).encode("utf-8")
            + b"\n"
            for r in (self.records[f] for f in self.order)
        ]
        body = b"".join(lines)
        target.parent.mkdir(parents=True, exist_ok=True)
        with open(target, "wb") as fh:
            fh.write(body)
            fh.write(json.dumps({"checksum": sha256_hex(body)}).encode("utf-8") + b"\n")
        return target

    @classmethod
    def load(cls, path: Path | str) -> "Transcript":
        data = Path(path).read_bytes()
        lines = data.splitlines(keepends=True)
        if not lines:
            raise CorruptStore(f"{path}: empty transcript")
        try:
            trailer = json.loads(lines[-1])
        except json.JSONDecodeError as exc:
            raise CorruptStore(f"{path}: unreadable checksum line") from exc
        body = b"".join(lines[:-1])
        if trailer.get("checksum") != sha256_hex(body):
            raise CorruptStore(f"{path}: checksum mismatch")
        transcript = cls()
        for line in lines[:-1]:
            record = json.loads(line)
            transcript.add(
                TranscriptRecord(
                    fingerprint=record["fingerprint"],
                    request=record["request"],
                    response_text=record["response_text"],
                    latency_ms=float(record["latency_ms"]),
                )
            )
        return transcript


class RecordingChatProvider:
    """Wraps a live (or scripted) provider and captures every exchange."""

    def __init__(self, inner: ChatProvider, transcript: Transcript | None = None):
        self.inner = inner
        self.model_name = inner.model_name
        self.transcript = transcript if transcript is not None else Transcript()

    def chat(self, messages: Sequence[Message]) -> ChatExchange:
        exchange = self.inner.chat(messages)
        self.transcript.add(
            TranscriptRecord(
                fingerprint=fingerprint(self.model_name, messages),
                request=request_payload(self.model_name, messages),
                response_text=exchange.response_text,
                latency_ms=exchange.latency_s * 1000.0,
            )
        )
        return exchange

    def save(self, path: Path | str) -> Path:
        return self.transcript.save(path)


class ReplayChatProvider:
    """Serves recorded exchanges by request fingerprint; never touches the
    network. latency_scale scales the recorded latencies (0 disables the
    sleep and reports zero latency contribution)."""

    def __init__(
        self,
        transcript: Transcript | Path | str,
        model_name: str,
        latency_scale: float = 0.0,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.transcript = transcript if isinstance(transcript, Transcript) else Transcript.load(transcript)
        self.model_name = model_name
        self.latency_scale = latency_scale
        self._sleep = sleep

    def chat(self, messages: Sequence[Message]) -> ChatExchange:
        fp = fingerprint(self.model_name, messages)
        record = self.transcript.records.get(fp)
        if record is None:
            raise MissingTranscript(f"no recorded exchange for fingerprint {fp}")
        latency = record.latency_ms / 1000.0 * self.latency_scale
        if latency > 0:
            self._sleep(latency)
        return ChatExchange(messages=tuple(messages), response_text=record.response_text, latency_s=latency)
