"""Enforcement: gate, apply, roll back, and audit configuration remediations.

Every lifecycle event lands in an append-only, hash-chained audit log;
targets are written through an adapter that is verified by read-back and
restored from the per-component last-safe snapshot on failure.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Callable, Protocol

from ranguard.agents.core import LoopOutcome, LoopResult
from ranguard.agents.report import ComplianceReport, ComplianceStatus
from ranguard.common import canonical_json, sha256_hex, utc_now
from ranguard.gnbconf import diff_configs
from ranguard.kb.pipeline import ingest_text
from ranguard.kb.store import EmbeddingProvider, KnowledgeStore

logger = logging.getLogger(__name__)

AUTO_POLICY = "auto-policy"


class ActionState(Enum):
    PENDING = "Pending"
    APPROVED = "Approved"
    REJECTED = "Rejected"
    APPLIED = "Applied"
    ROLLED_BACK = "RolledBack"
    FAILED = "Failed"


LEGAL_TRANSITIONS: dict[ActionState, frozenset[ActionState]] = {
    ActionState.PENDING: frozenset({ActionState.APPROVED, ActionState.REJECTED}),
    ActionState.APPROVED: frozenset({ActionState.APPLIED, ActionState.FAILED}),
    ActionState.APPLIED: frozenset({ActionState.ROLLED_BACK}),
    ActionState.REJECTED: frozenset(),
    ActionState.ROLLED_BACK: frozenset(),
    ActionState.FAILED: frozenset(),
}


class AuditEventKind(Enum):
    ASSESSMENT_COMPLETED = "AssessmentCompleted"
    ACTION_DECIDED = "ActionDecided"
    ACTION_APPLIED = "ActionApplied"
    ROLLBACK_PERFORMED = "RollbackPerformed"
    POLICY_INGESTED = "PolicyIngested"


class EnforcementError(Exception):
    pass


class DuplicateInFlight(EnforcementError):
    pass


class InvalidTransition(EnforcementError):
    pass


class UnknownAction(EnforcementError):
    pass


class NoSafeSnapshot(EnforcementError):
    pass


class PolicyViolation(EnforcementError):
    pass


class AdapterWriteError(EnforcementError):
    pass


@dataclass(frozen=True)
class EnforcementPolicy:
    require_human_approval: bool = True
    auto_apply: bool = False
    rollback_enabled: bool = True

    def __post_init__(self) -> None:
        if self.auto_apply and self.require_human_approval:
            raise ValueError("auto_apply requires require_human_approval=False")


# -- audit log ----------------------------------------------------------------

GENESIS_HASH = "0" * 64


@dataclass(frozen=True)
class AuditRecord:
    seq: int
    timestamp: str
    kind: AuditEventKind
    payload: dict
    payload_digest: str
    prev_hash: str
    this_hash: str

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "timestamp": self.timestamp,
            "kind": self.kind.value,
            "payload": self.payload,
            "payload_digest": self.payload_digest,
            "prev_hash": self.prev_hash,
            "hash": self.this_hash,
        }


def _chain_hash(seq: int, timestamp: str, kind: str, payload_digest: str, prev_hash: str) -> str:
    return sha256_hex(f"{seq}|{timestamp}|{kind}|{payload_digest}|{prev_hash}")


@dataclass(frozen=True)
class AuditVerdict:
    intact: bool
    broken_at: int | None = None


class AuditLog:
    """Append-only hash chain; optionally mirrored to a jsonl file."""

    def __init__(self, path: Path | str | None = None, now: Callable[[], datetime] = utc_now):
        self.path = Path(path) if path is not None else None
        self._now = now
        self.records: list[AuditRecord] = []
        if self.path is not None and self.path.exists():
            self._load()

    def _load(self) -> None:
        assert self.path is not None
        for line in self.path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            try:
                data = json.loads(line)
                record = AuditRecord(
                    seq=data["seq"],
                    timestamp=data["timestamp"],
                    kind=AuditEventKind(data["kind"]),
                    payload=data["payload"],
                    payload_digest=data["payload_digest"],
                    prev_hash=data["prev_hash"],
                    this_hash=data["hash"],
                )
            except (json.JSONDecodeError, KeyError, ValueError):
                # Unreadable line: keep a placeholder that can never verify,
                # so the chain check reports the break instead of crashing.
                record = AuditRecord(
                    seq=len(self.records),
                    timestamp="",
                    kind=AuditEventKind.ASSESSMENT_COMPLETED,
                    payload={"unreadable_line": line},
                    payload_digest="",
                    prev_hash="",
                    this_hash="",
                )
            self.records.append(record)

    def append(self, kind: AuditEventKind, payload: dict) -> AuditRecord:
        seq = len(self.records)
        timestamp = self._now().isoformat()
        payload_digest = sha256_hex(canonical_json(payload))
        prev_hash = self.records[-1].this_hash if self.records else GENESIS_HASH
        record = AuditRecord(
            seq=seq,
            timestamp=timestamp,
            kind=kind,
            payload=payload,
            payload_digest=payload_digest,
            prev_hash=prev_hash,
            this_hash=_chain_hash(seq, timestamp, kind.value, payload_digest, prev_hash),
        )
        self.records.append(record)
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record.to_dict(), sort_keys=True, ensure_ascii=True) + "\n")
        return record


def verify_audit_chain(log: AuditLog) -> AuditVerdict:
    """Recompute the chain from genesis; report the first broken record."""
    prev_hash = GENESIS_HASH
    for index, record in enumerate(log.records):
        if (
            record.seq != index
            or record.prev_hash != prev_hash
            or record.payload_digest != sha256_hex(canonical_json(record.payload))
            or record.this_hash
            != _chain_hash(record.seq, record.timestamp, record.kind.value, record.payload_digest, record.prev_hash)
        ):
            return AuditVerdict(intact=False, broken_at=index)
        prev_hash = record.this_hash
    return AuditVerdict(intact=True)


# -- target adapters -----------------------------------------------------------


class TargetAdapter(Protocol):
    def read(self, component_id: str) -> bytes: ...

    def write(self, component_id: str, config: bytes) -> None: ...


class FilesystemAdapter:
    """Maps component ids onto files; the desk-scale stand-in for a
    management-plane push."""

    def __init__(self, targets: dict[str, Path | str]):
        self.targets = {cid: Path(p) for cid, p in targets.items()}

    def _path(self, component_id: str) -> Path:
        try:
            return self.targets[component_id]
        except KeyError:
            raise AdapterWriteError(f"no target mapped for component {component_id!r}") from None

    def read(self, component_id: str) -> bytes:
        return self._path(component_id).read_bytes()

    def write(self, component_id: str, config: bytes) -> None:
        path = self._path(component_id)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(config)


class RecordingAdapter:
    """In-memory adapter for tests; can inject write failures."""

    def __init__(self, initial: dict[str, bytes] | None = None):
        self.contents: dict[str, bytes] = dict(initial or {})
        self.writes: list[tuple[str, bytes]] = []
        self.fail_next_write = False

    def read(self, component_id: str) -> bytes:
        return self.contents[component_id]

    def write(self, component_id: str, config: bytes) -> None:
        if self.fail_next_write:
            self.fail_next_write = False
            raise AdapterWriteError(f"injected write failure for {component_id}")
        self.contents[component_id] = config
        self.writes.append((component_id, config))


# -- pending actions -----------------------------------------------------------


@dataclass
class PendingAction:
    action_id: str
    component_id: str
    proposed_config: bytes
    report: ComplianceReport
    loop_outcome_ref: str
    state: ActionState
    needs_arbitration: bool
    created_at: datetime
    decided_at: datetime | None = None
    applied_at: datetime | None = None
    decided_by: str | None = None
    history: list[tuple[ActionState, str]] = field(default_factory=list)


class ActionQueue:
    """Single-writer store of remediation actions plus last-safe snapshots."""

    def __init__(self, audit: AuditLog, now: Callable[[], datetime] = utc_now):
        self.audit = audit
        self._now = now
        self.actions: dict[str, PendingAction] = {}
        self.last_safe: dict[str, bytes] = {}
        self._submissions = 0

    def get(self, action_id: str) -> PendingAction:
        try:
            return self.actions[action_id]
        except KeyError:
            raise UnknownAction(action_id) from None

    def pending(self) -> list[PendingAction]:
        return sorted(
            (a for a in self.actions.values() if a.state is ActionState.PENDING),
            key=lambda a: a.created_at,
        )

    def for_component(self, component_id: str) -> list[PendingAction]:
        return sorted(
            (a for a in self.actions.values() if a.component_id == component_id),
            key=lambda a: a.created_at,
        )

    def _transition(self, action: PendingAction, new_state: ActionState) -> None:
        if new_state not in LEGAL_TRANSITIONS[action.state]:
            raise InvalidTransition(f"{action.state.value} -> {new_state.value}")
        action.state = new_state
        action.history.append((new_state, self._now().isoformat()))

    # -- operations ------------------------------------------------------

    def submit_action(self, component_id: str, outcome: LoopOutcome, loop_ref: str = "") -> PendingAction | None:
        """Enqueue a remediation for a non-compliant or escalated outcome.

        Returns None for compliant converged outcomes (nothing to do).
        """
        needs_arbitration = outcome.outcome is LoopResult.ESCALATED
        if not needs_arbitration and outcome.final_report.status is ComplianceStatus.COMPLIANT:
            return None
        proposed = outcome.final_report.corrected_config
        if proposed is None:
            if not needs_arbitration:
                raise EnforcementError("non-compliant outcome carries no corrected config")
            proposed = b""
        if any(
            a.component_id == component_id and a.state is ActionState.PENDING
            for a in self.actions.values()
        ):
            raise DuplicateInFlight(f"a pending action already exists for {component_id!r}")

        self._submissions += 1
        action_id = sha256_hex(
            canonical_json(
                {
                    "component": component_id,
                    "config": sha256_hex(proposed),
                    "loop_ref": loop_ref,
                    "submission": self._submissions,
                }
            )
        )[:16]
        created = self._now()
        action = PendingAction(
            action_id=action_id,
            component_id=component_id,
            proposed_config=proposed,
            report=outcome.final_report,
            loop_outcome_ref=loop_ref,
            state=ActionState.PENDING,
            needs_arbitration=needs_arbitration,
            created_at=created,
            history=[(ActionState.PENDING, created.isoformat())],
        )
        self.actions[action_id] = action
        self.audit.append(
            AuditEventKind.ASSESSMENT_COMPLETED,
            {
                "action_id": action_id,
                "component_id": component_id,
                "status": outcome.final_report.status.value,
                "outcome": outcome.outcome.value,
                "needs_arbitration": needs_arbitration,
                "violations": sorted(outcome.final_report.violation_paths()),
            },
        )
        return action

    def decide(self, action_id: str, approve: bool, operator: str) -> PendingAction:
        action = self.get(action_id)
        self._transition(action, ActionState.APPROVED if approve else ActionState.REJECTED)
        action.decided_at = self._now()
        action.decided_by = operator
        self.audit.append(
            AuditEventKind.ACTION_DECIDED,
            {
                "action_id": action_id,
                "component_id": action.component_id,
                "verdict": "approve" if approve else "reject",
                "operator": operator,
            },
        )
        return action

    def apply(self, action_id: str, adapter: TargetAdapter, policy: EnforcementPolicy) -> PendingAction:
        """Snapshot, write, verify by read-back; restore the snapshot and
        mark Failed when anything goes wrong."""
        action = self.get(action_id)
        if action.state is ActionState.PENDING:
            if not policy.auto_apply:
                raise InvalidTransition("cannot apply a pending action without auto_apply policy")
            self._transition(action, ActionState.APPROVED)
            action.decided_at = self._now()
            action.decided_by = AUTO_POLICY
            self.audit.append(
                AuditEventKind.ACTION_DECIDED,
                {
                    "action_id": action_id,
                    "component_id": action.component_id,
                    "verdict": "approve",
                    "operator": AUTO_POLICY,
                },
            )
        if action.state is not ActionState.APPROVED:
            raise InvalidTransition(f"cannot apply from state {action.state.value}")

        snapshot = adapter.read(action.component_id)
        failure: str | None = None
        try:
            adapter.write(action.component_id, action.proposed_config)
            if adapter.read(action.component_id) != action.proposed_config:
                failure = "read-back verification mismatch"
        except AdapterWriteError as exc:
            failure = str(exc)

        if failure is not None:
            try:
                adapter.write(action.component_id, snapshot)
            except AdapterWriteError:
                logger.error("restore after failed apply also failed for %s", action.component_id)
            self._transition(action, ActionState.FAILED)
            self.audit.append(
                AuditEventKind.ACTION_APPLIED,
                {
                    "action_id": action_id,
                    "component_id": action.component_id,
                    "result": "failed",
                    "error": failure,
                },
            )
            return action

        self.last_safe[action.component_id] = snapshot
        self._transition(action, ActionState.APPLIED)
        action.applied_at = self._now()
        self.audit.append(
            AuditEventKind.ACTION_APPLIED,
            {
                "action_id": action_id,
                "component_id": action.component_id,
                "result": "applied",
                "config_digest": sha256_hex(action.proposed_config),
            },
        )
        return action

    def rollback(self, component_id: str, adapter: TargetAdapter, policy: EnforcementPolicy) -> PendingAction:
        """Restore the component's last-safe snapshot (single depth)."""
        if not policy.rollback_enabled:
            raise PolicyViolation("rollback is disabled by policy")
        applied = [
            a
            for a in self.actions.values()
            if a.component_id == component_id and a.state is ActionState.APPLIED
        ]
        if not applied or component_id not in self.last_safe:
            raise NoSafeSnapshot(f"no applied action with a safe snapshot for {component_id!r}")
        action = max(applied, key=lambda a: a.applied_at or a.created_at)
        snapshot = self.last_safe.pop(component_id)
        adapter.write(component_id, snapshot)
        self._transition(action, ActionState.ROLLED_BACK)
        self.audit.append(
            AuditEventKind.ROLLBACK_PERFORMED,
            {
                "action_id": action.action_id,
                "component_id": component_id,
                "restored_digest": sha256_hex(snapshot),
            },
        )
        return action


def contribute_feedback(
    action: PendingAction,
    store: KnowledgeStore,
    embedder: EmbeddingProvider,
    original_config: bytes | None = None,
    enabled: bool = True,
) -> int:
    """Ingest an applied remediation as a retrievable knowledge document.

    The document carries the violation summaries and the before/after text
    of the touched groups only. Failures are logged, never raised.
    """
    if not enabled:
        return 0
    if action.state is not ActionState.APPLIED:
        return 0
    try:
        before = original_config if original_config is not None else b""
        sections = [f"Remediation applied to component {action.component_id}.", ""]
        sections.append("Violations fixed:")
        for violation in action.report.violations:
            first_line = violation.summary.splitlines()[0] if violation.summary else violation.config_path
            sections.append(f"- {violation.config_path}: {first_line}")
        if before:
            diff = diff_configs(before, action.proposed_config)
            touched = sorted(p for p in diff.touched_group_paths if p)
            sections.append("")
            sections.append(f"Changed groups: {', '.join(touched) if touched else 'none'}")
            from ranguard.gnbconf import parse_config

            before_doc = parse_config(before)
            after_doc = parse_config(action.proposed_config)
            for path in touched:
                for label, doc in (("Before", before_doc), ("After", after_doc)):
                    node = doc.find(path)
                    if node is not None:
                        start, end = node.full_span
                        sections.append("")
                        sections.append(f"{label} ({path}):")
                        sections.append(doc.raw[start:end].decode("utf-8"))
        text = "\n".join(sections) + "\n"
        return ingest_text(
            store,
            text,
            f"remediation-{action.action_id}",
            embedder,
            origin="feedback",
        )
    except Exception:
        logger.exception("feedback ingestion failed for action %s", action.action_id)
        return 0
