"""Policy intelligence hub: watch specification sources, emit change events.

Change detection is content-hash based (robust against copies and touch),
and removal is a soft delete downstream: the knowledge base marks chunks
stale instead of deleting history.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from enum import Enum
from pathlib import Path
from typing import Callable, Mapping, Sequence

from ranguard.common import sha256_hex, utc_now

logger = logging.getLogger(__name__)


class SourceKind(Enum):
    DIRECTORY = "directory"
    URL_LIST = "url-list"


class ChangeKind(Enum):
    NEW = "New"
    UPDATED = "Updated"
    REMOVED = "Removed"


class SourceUnavailable(Exception):
    pass


@dataclass(frozen=True)
class PolicySource:
    source_id: str
    kind: SourceKind
    location: str | tuple[str, ...]  # directory path, or URLs
    poll_interval: timedelta = timedelta(hours=6)

    def __post_init__(self) -> None:
        if self.poll_interval < timedelta(seconds=1):
            raise ValueError("poll_interval must be at least 1 second")


@dataclass(frozen=True)
class ChangeEvent:
    filename: str
    change: ChangeKind
    old_hash: str | None
    new_hash: str | None
    detected_at: datetime

    def __post_init__(self) -> None:
        if self.change is ChangeKind.UPDATED:
            if self.old_hash is None or self.new_hash is None or self.old_hash == self.new_hash:
                raise ValueError("Updated events need two distinct hashes")


Fetcher = Callable[[str], str]


def _default_fetcher(url: str) -> str:
    import httpx

    response = httpx.get(url, timeout=30.0, follow_redirects=True)
    response.raise_for_status()
    return response.text


def _url_filename(url: str) -> str:
    tail = url.rstrip("/").rsplit("/", 1)[-1]
    return tail or url


def snapshot(source: PolicySource, fetcher: Fetcher = _default_fetcher) -> dict[str, str]:
    """Digest every document the source currently offers."""
    digests: dict[str, str] = {}
    if source.kind is SourceKind.DIRECTORY:
        root = Path(str(source.location))
        if not root.is_dir():
            raise SourceUnavailable(f"{source.source_id}: {root} is not a readable directory")
        for path in sorted(root.iterdir()):
            if path.is_file() and path.suffix.lower() in (".txt", ".md"):
                digests[path.name] = sha256_hex(path.read_bytes())
    else:
        urls = source.location if isinstance(source.location, tuple) else (str(source.location),)
        for url in urls:
            try:
                digests[_url_filename(url)] = sha256_hex(fetcher(url))
            except Exception as exc:
                raise SourceUnavailable(f"{source.source_id}: {url}: {exc}") from exc
    return digests


def read_document(source: PolicySource, filename: str, fetcher: Fetcher = _default_fetcher) -> str:
    if source.kind is SourceKind.DIRECTORY:
        return (Path(str(source.location)) / filename).read_text(encoding="utf-8")
    urls = source.location if isinstance(source.location, tuple) else (str(source.location),)
    for url in urls:
        if _url_filename(url) == filename:
            return fetcher(url)
    raise SourceUnavailable(f"{source.source_id}: no URL for {filename!r}")


def diff_snapshots(before: Mapping[str, str], after: Mapping[str, str], now: Callable[[], datetime] = utc_now) -> list[ChangeEvent]:
    """Set-difference semantics, sorted by filename."""
    detected = now()
    events: list[ChangeEvent] = []
    for filename in sorted(set(before) | set(after)):
        old = before.get(filename)
        new = after.get(filename)
        if old is None and new is not None:
            events.append(ChangeEvent(filename, ChangeKind.NEW, None, new, detected))
        elif old is not None and new is None:
            events.append(ChangeEvent(filename, ChangeKind.REMOVED, old, None, detected))
        elif old != new:
            events.append(ChangeEvent(filename, ChangeKind.UPDATED, old, new, detected))
    return events


IngestCallback = Callable[[ChangeEvent, str | None], None]


@dataclass
class PolicyHub:
    """Polls sources and routes change events to the ingest callback
    exactly once per (filename, content hash)."""

    sources: Sequence[PolicySource]
    ingest_callback: IngestCallback
    fetcher: Fetcher = _default_fetcher
    max_callback_retries: int = 2
    sleep: Callable[[float], None] = time.sleep
    snapshots: dict[str, dict[str, str]] = field(default_factory=dict)
    _delivered: set[tuple[str, str]] = field(default_factory=set)

    def poll_once(self) -> list[ChangeEvent]:
        """One pass over all sources; a failing source never blocks the rest."""
        emitted: list[ChangeEvent] = []
        for source in self.sources:
            try:
                current = snapshot(source, self.fetcher)
            except SourceUnavailable as exc:
                logger.warning("source unavailable: %s", exc)
                continue
            previous = self.snapshots.get(source.source_id, {})
            for event in diff_snapshots(previous, current):
                key = (event.filename, event.new_hash or f"removed:{event.old_hash}")
                if key in self._delivered:
                    continue
                content: str | None = None
                if event.change is not ChangeKind.REMOVED:
                    try:
                        content = read_document(source, event.filename, self.fetcher)
                    except (OSError, SourceUnavailable) as exc:
                        logger.warning("could not read %s: %s", event.filename, exc)
                        continue
                if self._deliver(event, content):
                    self._delivered.add(key)
                    emitted.append(event)
                    bucket = self.snapshots.setdefault(source.source_id, {})
                    if event.change is ChangeKind.REMOVED:
                        bucket.pop(event.filename, None)
                    else:
                        bucket[event.filename] = event.new_hash or ""
        return emitted

    def _deliver(self, event: ChangeEvent, content: str | None) -> bool:
        delay = 0.1
        for attempt in range(self.max_callback_retries + 1):
            try:
                self.ingest_callback(event, content)
                return True
            except Exception:
                logger.exception(
                    "ingest callback failed for %s (attempt %d/%d)",
                    event.filename,
                    attempt + 1,
                    self.max_callback_retries + 1,
                )
                if attempt < self.max_callback_retries:
                    self.sleep(delay)
                    delay *= 2
        return False

    def run_forever(self) -> None:  # pragma: no cover - exercised manually
        interval = min((s.poll_interval for s in self.sources), default=timedelta(hours=6))
        while True:
            self.poll_once()
            self.sleep(interval.total_seconds())


def run_hub(
    sources: Sequence[PolicySource],
    ingest_callback: IngestCallback,
    single_pass: bool = True,
    fetcher: Fetcher = _default_fetcher,
) -> list[ChangeEvent]:
    hub = PolicyHub(sources=sources, ingest_callback=ingest_callback, fetcher=fetcher)
    if single_pass:
        return hub.poll_once()
    hub.run_forever()
    return []  # pragma: no cover
