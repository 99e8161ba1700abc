"""Security event ingestion and sliding-window correlation.

Events arrive as line-delimited records; correlation rules fire a pattern
at the earliest event that completes the threshold inside the window, and
later matches extend the open pattern instead of re-firing.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from enum import Enum
from pathlib import Path
from typing import Sequence

from ranguard.agents.core import Trigger, TriggerKind
from ranguard.common import parse_rfc3339

logger = logging.getLogger(__name__)


class EventCategory(Enum):
    AUTHENTICATION = "Authentication"
    AUTHORIZATION = "Authorization"
    APP_BEHAVIOR = "AppBehavior"


class FileUnreadable(Exception):
    pass


@dataclass(frozen=True)
class SecurityEvent:
    timestamp: datetime
    component_id: str
    category: EventCategory
    attributes: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class CorrelationRule:
    rule_id: str
    category: EventCategory
    attributes: dict[str, str]  # equality conjunction
    threshold: int
    window: timedelta

    def __post_init__(self) -> None:
        if self.threshold < 1:
            raise ValueError("threshold must be >= 1")
        if self.window <= timedelta(0):
            raise ValueError("window must be positive")

    def matches(self, event: SecurityEvent) -> bool:
        if event.category is not self.category:
            return False
        return all(event.attributes.get(k) == v for k, v in self.attributes.items())


@dataclass(frozen=True)
class EventPattern:
    rule_id: str
    matched: tuple[SecurityEvent, ...]
    window_start: datetime
    window_end: datetime
    component_ids: frozenset[str]

    @property
    def summary(self) -> str:
        components = ", ".join(sorted(self.component_ids))
        return (
            f"rule {self.rule_id}: {len(self.matched)} correlated events "
            f"on [{components}] between {self.window_start.isoformat()} "
            f"and {self.window_end.isoformat()}"
        )


@dataclass
class IngestResult:
    events: list[SecurityEvent]
    rejects: list[tuple[int, str, str]]  # (line number, line, reason)


def ingest_events(path: Path | str) -> IngestResult:
    """Parse and sort an event file; malformed lines become rejects."""
    target = Path(path)
    try:
        lines = target.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise FileUnreadable(f"{target}: {exc}") from exc
    events: list[SecurityEvent] = []
    rejects: list[tuple[int, str, str]] = []
    for number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            events.append(
                SecurityEvent(
                    timestamp=parse_rfc3339(record["ts"]),
                    component_id=str(record["component"]),
                    category=EventCategory(record["category"]),
                    attributes={str(k): str(v) for k, v in record.get("attrs", {}).items()},
                )
            )
        except (ValueError, KeyError, TypeError) as exc:
            rejects.append((number, line, str(exc)))
    events.sort(key=lambda e: e.timestamp)
    if rejects:
        logger.warning("rejected %d malformed event lines", len(rejects))
    return IngestResult(events=events, rejects=rejects)


def correlate(events: Sequence[SecurityEvent], rules: Sequence[CorrelationRule]) -> list[EventPattern]:
    """Pure function of (sorted events, rules); patterns never contain
    events outside their declared window."""
    patterns: list[EventPattern] = []
    for rule in rules:
        matches = [e for e in events if rule.matches(e)]
        pending: list[SecurityEvent] = []
        open_pattern: list[SecurityEvent] | None = None
        open_start: datetime | None = None
        for event in matches:
            if open_pattern is not None and open_start is not None:
                if event.timestamp <= open_start + rule.window:
                    open_pattern.append(event)
                    continue
                patterns.append(_finish(rule, open_pattern))
                open_pattern, open_start = None, None
            pending.append(event)
            pending = [e for e in pending if event.timestamp - e.timestamp <= rule.window]
            if len(pending) >= rule.threshold:
                open_pattern = list(pending)
                open_start = pending[0].timestamp
                pending = []
        if open_pattern is not None:
            patterns.append(_finish(rule, open_pattern))
    patterns.sort(key=lambda p: (p.window_start, p.rule_id))
    return patterns


def _finish(rule: CorrelationRule, matched: list[SecurityEvent]) -> EventPattern:
    return EventPattern(
        rule_id=rule.rule_id,
        matched=tuple(matched),
        window_start=matched[0].timestamp,
        window_end=matched[-1].timestamp,
        component_ids=frozenset(e.component_id for e in matched),
    )


def raise_triggers(patterns: Sequence[EventPattern]) -> list[Trigger]:
    return [Trigger(kind=TriggerKind.RUNTIME_EVENT, payload=p) for p in patterns]
