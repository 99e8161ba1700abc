"""Shared primitives: digests, canonical serialization, store integrity errors."""

from __future__ import annotations

import hashlib
import json
from datetime import datetime, timezone
from typing import Any


class CorruptStore(Exception):
    """A persisted store or transcript failed its integrity check."""


class VersionMismatch(Exception):
    """A persisted file was written by an incompatible format version."""


class DimensionMismatch(Exception):
    """An embedding vector does not match the expected dimension."""


def sha256_hex(data: bytes | str) -> str:
    if isinstance(data, str):
        data = data.encode("utf-8")
    return hashlib.sha256(data).hexdigest()


def canonical_json(obj: Any) -> str:
    """Stable serialization used for fingerprints and payload digests."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def content_digest(obj: Any) -> str:
    return sha256_hex(canonical_json(obj))


def utc_now() -> datetime:
    return datetime.now(timezone.utc)


def parse_rfc3339(value: str) -> datetime:
    # datetime.fromisoformat on 3.10 rejects the trailing 'Z' form.
    if value.endswith(("Z", "z")):
        value = value[:-1] + "+00:00"
    return datetime.fromisoformat(value)
