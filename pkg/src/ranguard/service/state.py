"""Service state: wiring of stores, queue, registry, and run records, with
file-backed persistence so every view is reconstructible after a restart."""

from __future__ import annotations

import difflib
import json
import logging
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Callable

from ranguard.agents.core import (
    AgentRuntime,
    ComponentRegistry,
    LoopOutcome,
    LoopResult,
    RetrievalMode,
    RunLog,
    run_compliance_loop,
)
from ranguard.agents.report import ComplianceReport, ComplianceStatus
from ranguard.common import utc_now
from ranguard.enforcement import (
    ActionQueue,
    ActionState,
    AuditLog,
    DuplicateInFlight,
    EnforcementPolicy,
    FilesystemAdapter,
    PendingAction,
    TargetAdapter,
    contribute_feedback,
)
from ranguard.gnbconf import diff_configs, parse_config
from ranguard.kb.store import EmbeddingProvider, KnowledgeStore
from ranguard.providers import ChatProvider
from ranguard.service.config import ServiceConfig

logger = logging.getLogger(__name__)


@dataclass
class RunRecord:
    run_id: str
    component_id: str
    mode: str
    state: str  # running | done | failed
    submitted_at: str
    finished_at: str | None = None
    outcome: dict | None = None
    error: str | None = None
    kind: str = "static"  # static | dynamic

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "component_id": self.component_id,
            "mode": self.mode,
            "state": self.state,
            "submitted_at": self.submitted_at,
            "finished_at": self.finished_at,
            "outcome": self.outcome,
            "error": self.error,
            "kind": self.kind,
        }


def _action_to_dict(action: PendingAction) -> dict:
    return {
        "action_id": action.action_id,
        "component_id": action.component_id,
        "proposed_config": action.proposed_config.decode("utf-8"),
        "report": action.report.to_dict(),
        "loop_outcome_ref": action.loop_outcome_ref,
        "state": action.state.value,
        "needs_arbitration": action.needs_arbitration,
        "created_at": action.created_at.isoformat(),
        "decided_at": action.decided_at.isoformat() if action.decided_at else None,
        "applied_at": action.applied_at.isoformat() if action.applied_at else None,
        "decided_by": action.decided_by,
        "history": [[state.value, ts] for state, ts in action.history],
    }


def _action_from_dict(data: dict) -> PendingAction:
    return PendingAction(
        action_id=data["action_id"],
        component_id=data["component_id"],
        proposed_config=data["proposed_config"].encode("utf-8"),
        report=ComplianceReport.from_dict(data["report"]),
        loop_outcome_ref=data["loop_outcome_ref"],
        state=ActionState(data["state"]),
        needs_arbitration=data["needs_arbitration"],
        created_at=datetime.fromisoformat(data["created_at"]),
        decided_at=datetime.fromisoformat(data["decided_at"]) if data["decided_at"] else None,
        applied_at=datetime.fromisoformat(data["applied_at"]) if data["applied_at"] else None,
        decided_by=data["decided_by"],
        history=[(ActionState(state), ts) for state, ts in data["history"]],
    )


def diff_hunks(original: bytes, edited: bytes) -> list[dict]:
    """Line hunks between two config texts, each attributed to the group it
    falls inside; consumed as-is by the dashboard (never recomputed there)."""
    original_doc = parse_config(original)
    o_lines = original.decode("utf-8").splitlines()
    e_lines = edited.decode("utf-8").splitlines()
    offsets = [0]
    for line in original.splitlines(keepends=True):
        offsets.append(offsets[-1] + len(line))
    matcher = difflib.SequenceMatcher(a=o_lines, b=e_lines, autojunk=False)
    hunks: list[dict] = []
    for tag, i1, i2, j1, j2 in matcher.get_opcodes():
        if tag == "equal":
            continue
        anchor = offsets[i1] if i1 < len(offsets) else max(len(original) - 1, 0)
        path = original_doc.attribution_path(min(anchor, max(len(original) - 1, 0)))
        hunks.append(
            {
                "original_start": i1 + 1,
                "original_lines": o_lines[i1:i2],
                "edited_start": j1 + 1,
                "edited_lines": e_lines[j1:j2],
                "group_path": path or "",
            }
        )
    return hunks


@dataclass
class ComponentTrack:
    last_static: tuple[str, str] | None = None  # (status, at)
    last_dynamic: tuple[str, str] | None = None


class ServiceState:
    """Everything the HTTP surface and CLI verbs operate on."""

    def __init__(
        self,
        config: ServiceConfig,
        chat: ChatProvider | None = None,
        embedder: EmbeddingProvider | None = None,
        store: KnowledgeStore | None = None,
        adapter: TargetAdapter | None = None,
        synchronous: bool = False,
        now: Callable[[], datetime] = utc_now,
    ):
        self.config = config
        self.now = now
        self.state_dir = Path(config.state_dir)
        self.state_dir.mkdir(parents=True, exist_ok=True)

        self.embedder = embedder if embedder is not None else config.embedder()
        self.store = store if store is not None else self._load_store()
        self.chat = chat if chat is not None else config.chat_provider()
        self.audit = AuditLog(self.state_dir / "audit.jsonl", now=now)
        self.queue = ActionQueue(self.audit, now=now)
        self.registry = ComponentRegistry()
        self.runs: dict[str, RunRecord] = {}
        self.tracks: dict[str, ComponentTrack] = {}
        self.adapter = adapter if adapter is not None else FilesystemAdapter(dict(config.components))
        self.policy: EnforcementPolicy = config.policy
        self.runtime = AgentRuntime(
            chat=self.chat,
            embedder=self.embedder,
            store=self.store,
            settings=config.retrieval,
            run_log=RunLog(self.state_dir / "runlog.jsonl"),
        )
        self._synchronous = synchronous
        self._executor = None if synchronous else ThreadPoolExecutor(max_workers=2)
        self._lock = threading.Lock()
        self._in_flight: set[str] = set()
        self._load_persisted()
        self._register_configured_components()

    # -- persistence -------------------------------------------------------

    def _load_store(self) -> KnowledgeStore:
        store_path = self.state_dir / "store.jsonl"
        if store_path.exists():
            return KnowledgeStore.load(store_path)
        return KnowledgeStore(
            dimension=self.embedder.dimension,
            embedder_id=self.embedder.embedder_id,
            path=store_path,
        )

    def save_store(self) -> None:
        self.store.persist(self.state_dir / "store.jsonl")

    def _load_persisted(self) -> None:
        runs_path = self.state_dir / "runs.jsonl"
        if runs_path.exists():
            for line in runs_path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    data = json.loads(line)
                    record = RunRecord(**data)
                    if record.state == "running":  # interrupted by a crash
                        record.state = "failed"
                        record.error = "interrupted"
                    self.runs[record.run_id] = record
        actions_path = self.state_dir / "actions.json"
        if actions_path.exists():
            data = json.loads(actions_path.read_text(encoding="utf-8"))
            for entry in data.get("actions", []):
                action = _action_from_dict(entry)
                self.queue.actions[action.action_id] = action
            self.queue.last_safe = {
                cid: text.encode("utf-8") for cid, text in data.get("last_safe", {}).items()
            }
            self.queue._submissions = int(data.get("submissions", len(self.queue.actions)))
        tracks_path = self.state_dir / "components.json"
        if tracks_path.exists():
            data = json.loads(tracks_path.read_text(encoding="utf-8"))
            for cid, entry in data.items():
                track = ComponentTrack(
                    last_static=tuple(entry["last_static"]) if entry.get("last_static") else None,
                    last_dynamic=tuple(entry["last_dynamic"]) if entry.get("last_dynamic") else None,
                )
                self.tracks[cid] = track
                if entry.get("config_text") is not None:
                    record = self.registry.register(cid, entry["config_text"])
                    if entry.get("last_verified_compliant") is not None:
                        record.last_verified_compliant = entry["last_verified_compliant"].encode("utf-8")

    def _register_configured_components(self) -> None:
        for component_id, path in self.config.components.items():
            if component_id not in self.registry and Path(path).exists():
                self.registry.register(component_id, Path(path).read_bytes())
            self.tracks.setdefault(component_id, ComponentTrack())

    def _append_run(self, record: RunRecord) -> None:
        with open(self.state_dir / "runs.jsonl", "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record.to_dict(), sort_keys=True, ensure_ascii=True) + "\n")

    def save_actions(self) -> None:
        payload = {
            "actions": [_action_to_dict(a) for _, a in sorted(self.queue.actions.items())],
            "last_safe": {cid: text.decode("utf-8") for cid, text in self.queue.last_safe.items()},
            "submissions": self.queue._submissions,
        }
        (self.state_dir / "actions.json").write_text(
            json.dumps(payload, sort_keys=True, ensure_ascii=True, indent=1), encoding="utf-8"
        )

    def save_components(self) -> None:
        payload = {}
        for component_id, record in self.registry.items():
            track = self.tracks.get(component_id, ComponentTrack())
            payload[component_id] = {
                "config_text": record.config_text.decode("utf-8"),
                "last_verified_compliant": (
                    record.last_verified_compliant.decode("utf-8")
                    if record.last_verified_compliant
                    else None
                ),
                "last_static": list(track.last_static) if track.last_static else None,
                "last_dynamic": list(track.last_dynamic) if track.last_dynamic else None,
            }
        for component_id, track in self.tracks.items():
            if component_id not in payload:
                payload[component_id] = {
                    "config_text": None,
                    "last_verified_compliant": None,
                    "last_static": list(track.last_static) if track.last_static else None,
                    "last_dynamic": list(track.last_dynamic) if track.last_dynamic else None,
                }
        (self.state_dir / "components.json").write_text(
            json.dumps(payload, sort_keys=True, ensure_ascii=True, indent=1), encoding="utf-8"
        )

    # -- assessments ---------------------------------------------------------

    def submit_assessment(
        self,
        component_id: str,
        config_text: str,
        mode: RetrievalMode | None = None,
        kind: str = "static",
        extra_context: str | None = None,
    ) -> str:
        with self._lock:
            if component_id in self._in_flight:
                raise DuplicateInFlight(f"a run for {component_id!r} is already in flight")
            self._in_flight.add(component_id)
            run_id = f"run-{uuid.uuid4().hex[:12]}"
            record = RunRecord(
                run_id=run_id,
                component_id=component_id,
                mode=(mode or self.config.mode).value,
                state="running",
                submitted_at=self.now().isoformat(),
                kind=kind,
            )
            self.runs[run_id] = record
        if self._synchronous:
            self._execute_run(run_id, component_id, config_text, mode or self.config.mode, kind, extra_context)
        else:
            assert self._executor is not None
            self._executor.submit(
                self._execute_run, run_id, component_id, config_text, mode or self.config.mode, kind, extra_context
            )
        return run_id

    def _execute_run(
        self,
        run_id: str,
        component_id: str,
        config_text: str,
        mode: RetrievalMode,
        kind: str,
        extra_context: str | None,
    ) -> None:
        record = self.runs[run_id]
        try:
            registered = self.registry.register(component_id, config_text)
            outcome = run_compliance_loop(
                self.runtime,
                config_text,
                mode,
                max_iterations=self.config.max_iterations,
                prior_compliant=registered.last_verified_compliant,
                extra_context=extra_context,
            )
            self._finish_run(record, component_id, outcome, kind)
        except Exception as exc:
            logger.exception("run %s failed", run_id)
            with self._lock:
                record.state = "failed"
                record.error = f"{type(exc).__name__}: {exc}"
                record.finished_at = self.now().isoformat()
                self._in_flight.discard(component_id)
            self._append_run(record)

    def _finish_run(self, record: RunRecord, component_id: str, outcome: LoopOutcome, kind: str) -> None:
        with self._lock:
            record.outcome = outcome.to_dict()
            record.state = "done"
            record.finished_at = self.now().isoformat()
            status = outcome.final_report.status.value
            track = self.tracks.setdefault(component_id, ComponentTrack())
            stamp = (status, record.finished_at)
            if kind == "dynamic":
                track.last_dynamic = stamp
            else:
                track.last_static = stamp
            registered = self.registry.get(component_id)
            if outcome.last_verified_compliant is not None:
                registered.last_verified_compliant = outcome.last_verified_compliant
            self._in_flight.discard(component_id)
        try:
            if outcome.outcome is LoopResult.ESCALATED or outcome.final_report.status is ComplianceStatus.NON_COMPLIANT:
                self.queue.submit_action(component_id, outcome, loop_ref=record.run_id)
        except DuplicateInFlight:
            logger.warning("pending action already open for %s; not enqueueing another", component_id)
        self._append_run(record)
        self.save_actions()
        self.save_components()

    # -- decisions ------------------------------------------------------------

    def decide_action(self, action_id: str, approve: bool, operator: str) -> PendingAction:
        action = self.queue.decide(action_id, approve, operator)
        applied_original: bytes | None = None
        if approve:
            try:
                applied_original = self.adapter.read(action.component_id)
            except Exception:
                applied_original = None
            action = self.queue.apply(action.action_id, self.adapter, self.policy)
            if action.state is ActionState.APPLIED:
                self.registry.register(action.component_id, action.proposed_config)
                track = self.tracks.setdefault(action.component_id, ComponentTrack())
                track.last_static = (ComplianceStatus.COMPLIANT.value, self.now().isoformat())
                contribute_feedback(
                    action,
                    self.store,
                    self.embedder,
                    original_config=applied_original,
                    enabled=self.config.feedback_ingestion,
                )
                self.save_store()
        self.save_actions()
        self.save_components()
        return action

    def rollback_component(self, component_id: str) -> PendingAction:
        action = self.queue.rollback(component_id, self.adapter, self.policy)
        self.registry.register(component_id, self.adapter.read(component_id))
        self.save_actions()
        self.save_components()
        return action

    # -- views ------------------------------------------------------------------

    def component_status(self) -> list[dict]:
        rows = []
        ids = {cid for cid, _ in self.registry.items()} | set(self.tracks) | set(self.config.components)
        for component_id in sorted(ids):
            track = self.tracks.get(component_id, ComponentTrack())
            stamps = [s for s in (track.last_static, track.last_dynamic) if s]
            last = max(stamps, key=lambda s: s[1]) if stamps else None
            pending = [a for a in self.queue.for_component(component_id) if a.state is ActionState.PENDING]
            rows.append(
                {
                    "component_id": component_id,
                    "last_status": last[0] if last else "Unknown",
                    "last_checked_at": last[1] if last else None,
                    "static_check_passed": bool(track.last_static and track.last_static[0] == "Compliant"),
                    "dynamic_check_passed": bool(track.last_dynamic and track.last_dynamic[0] == "Compliant"),
                    "pending_action_id": pending[0].action_id if pending else None,
                }
            )
        return rows

    def run_view(self, run_id: str) -> dict | None:
        record = self.runs.get(run_id)
        return record.to_dict() if record else None

    def pending_view(self) -> list[dict]:
        rows = []
        for action in self.queue.pending():
            try:
                current = self.adapter.read(action.component_id)
            except Exception:
                current = b""
            run = self.runs.get(action.loop_outcome_ref)
            reflection_history = (
                run.outcome.get("reflection_history", []) if run and run.outcome else []
            )
            entry = _action_to_dict(action)
            entry["diff"] = diff_hunks(current, action.proposed_config) if current else []
            entry["reflection_history"] = reflection_history
            rows.append(entry)
        return rows

    def history_view(self, component_id: str) -> list[dict] | None:
        known = {cid for cid, _ in self.registry.items()} | set(self.tracks) | set(self.config.components)
        if component_id not in known:
            return None
        return [
            record.to_dict()
            for record in self.audit.records
            if record.payload.get("component_id") == component_id
        ]

    def close(self) -> None:
        if self._executor is not None:
            self._executor.shutdown(wait=True)
