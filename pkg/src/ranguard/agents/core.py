"""Agent orchestration: retrieval modes, the assess/reflect loop, triggers.

Tool use is orchestrated here rather than through provider-native function
calling: the orchestrator runs the query generator, performs retrieval,
and injects results into the assessment prompt. That keeps runs
deterministic and provider-agnostic.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Callable, Sequence

from ranguard.agents.prompts import build_prompts, build_query_prompts, build_reflection_prompts
from ranguard.agents.report import (
    ComplianceReport,
    ComplianceStatus,
    ReflectionFeedback,
    parse_reflection,
    parse_report,
    resolve_violation_paths,
)
from ranguard.common import utc_now
from ranguard.gnbconf import ParseError, parse_config
from ranguard.kb.search import RetrievalResult, rerank, search
from ranguard.kb.store import EmbeddingProvider, KnowledgeStore
from ranguard.providers import ChatProvider, fingerprint

logger = logging.getLogger(__name__)


class RetrievalMode(Enum):
    NO_RAG = "no-rag"
    PLAIN_RAG = "rag"
    AGENTIC_RAG = "agentic-rag"


class TriggerKind(Enum):
    POLICY_UPDATE = "policy-update"
    CODE_SUBMISSION = "code-submission"
    RUNTIME_EVENT = "runtime-event"


class QueryOrigin(Enum):
    QUERY_GENERATOR = "query-generator"
    ASSESSMENT_AGENT = "assessment-agent"


class LoopResult(Enum):
    CONVERGED = "converged"
    ESCALATED = "escalated"


class EmptyPlan(Exception):
    """The query generator produced no usable query sentences."""


class ConfigInputError(ValueError):
    """The submitted configuration does not parse; nothing was sent to a model."""


class TriggerRejected(Exception):
    pass


@dataclass(frozen=True)
class Trigger:
    kind: TriggerKind
    payload: object
    received_at: datetime = field(default_factory=utc_now)


@dataclass(frozen=True)
class CodeSubmission:
    component_id: str
    config_text: str


@dataclass(frozen=True)
class QueryPlan:
    queries: tuple[str, ...]
    generated_by: QueryOrigin


@dataclass(frozen=True)
class RetrievalSettings:
    k: int = 8
    k_total: int = 12
    max_queries: int = 8
    prompt_char_budget: int = 200_000
    plain_rag_query_source: str = "config"  # "config" or "model"


class RunLog:
    """Line-delimited structured log, one record per provider call."""

    def __init__(self, path: Path | str):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)

    def write(self, record: dict) -> None:
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, sort_keys=True, ensure_ascii=True) + "\n")


@dataclass
class AgentRuntime:
    """Everything one assessment needs: providers, store, knobs."""

    chat: ChatProvider
    embedder: EmbeddingProvider
    store: KnowledgeStore
    settings: RetrievalSettings = field(default_factory=RetrievalSettings)
    run_log: RunLog | None = None
    timer: Callable[[], float] | None = None  # None: report provider latencies only
    include_feedback_chunks: bool = True

    def log(self, record: dict) -> None:
        if self.run_log is not None:
            self.run_log.write(record)


@dataclass
class AssessmentResult:
    report: ComplianceReport
    mode_requested: RetrievalMode
    mode_used: RetrievalMode
    retrieved: tuple[RetrievalResult, ...]
    query_plan: QueryPlan | None
    latency_s: float

    def to_dict(self) -> dict:
        return {
            "report": self.report.to_dict(),
            "mode_requested": self.mode_requested.value,
            "mode_used": self.mode_used.value,
            "retrieved": [
                {"filename": r.chunk.filename, "ordinal": r.chunk.ordinal, "rank": r.rank}
                for r in self.retrieved
            ],
            "queries": list(self.query_plan.queries) if self.query_plan else None,
            "latency_s": self.latency_s,
        }


@dataclass
class LoopOutcome:
    final_report: ComplianceReport
    iterations_used: int
    outcome: LoopResult
    last_verified_compliant: bytes | None
    reflection_history: tuple[ReflectionFeedback, ...]
    assessments: tuple[AssessmentResult, ...]

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome.value,
            "iterations_used": self.iterations_used,
            "final_report": self.final_report.to_dict(),
            "last_verified_compliant": (
                self.last_verified_compliant.decode("utf-8")
                if self.last_verified_compliant is not None
                else None
            ),
            "reflection_history": [f.to_dict() for f in self.reflection_history],
            "assessments": [a.to_dict() for a in self.assessments],
        }


_SENTENCE_SPLIT = re.compile(r"(?<=[.!?])\s+")
_HAS_LETTER = re.compile(r"[A-Za-z]")


def split_query_sentences(text: str, max_queries: int) -> tuple[str, ...]:
    """Newline- and period-delimited sentence split, trimmed, deduplicated,
    capped. Fragments without letters (stray numbering) are dropped."""
    queries: list[str] = []
    seen: set[str] = set()
    for line in text.splitlines():
        for fragment in _SENTENCE_SPLIT.split(line.strip()):
            fragment = fragment.strip()
            if not fragment or not _HAS_LETTER.search(fragment):
                continue
            if fragment not in seen:
                seen.add(fragment)
                queries.append(fragment)
            if len(queries) >= max_queries:
                return tuple(queries)
    return tuple(queries)


def generate_queries(runtime: AgentRuntime, config_text: str) -> tuple[QueryPlan, float]:
    """One provider call; returns the plan and the call latency."""
    exchange = runtime.chat.chat(build_query_prompts(config_text))
    runtime.log(
        {
            "event": "chat",
            "purpose": "query-generation",
            "fingerprint": fingerprint(runtime.chat.model_name, exchange.messages),
            "latency_ms": exchange.latency_s * 1000.0,
        }
    )
    queries = split_query_sentences(exchange.response_text, runtime.settings.max_queries)
    if not queries:
        raise EmptyPlan("query generator returned no usable sentences")
    return QueryPlan(queries=queries, generated_by=QueryOrigin.QUERY_GENERATOR), exchange.latency_s


def retrieve_for_plan(
    runtime: AgentRuntime,
    plan: QueryPlan,
    context: str,
) -> tuple[RetrievalResult, ...]:
    """One search per query; merged by chunk id keeping the best cosine,
    reranked against the full context, truncated to k_total."""
    best: dict[tuple[str, int], RetrievalResult] = {}
    for query in plan.queries:
        for result in search(
            runtime.store,
            query,
            runtime.settings.k,
            runtime.embedder,
            include_feedback=runtime.include_feedback_chunks,
        ):
            key = result.chunk.chunk_id
            if key not in best or result.cosine_score > best[key].cosine_score:
                best[key] = result
    merged = sorted(best.values(), key=lambda r: (-r.cosine_score, r.chunk.chunk_id))
    reranked = rerank(merged, context, top_n=len(merged))
    return tuple(reranked[: runtime.settings.k_total])


def _plain_retrieval(runtime: AgentRuntime, config_text: str) -> tuple[RetrievalResult, ...]:
    plan = QueryPlan(queries=(config_text,), generated_by=QueryOrigin.ASSESSMENT_AGENT)
    return retrieve_for_plan(runtime, plan, config_text)


def assess_compliance(
    runtime: AgentRuntime,
    mode: RetrievalMode,
    config_text: str | bytes,
    feedback: ReflectionFeedback | None = None,
    extra_context: str | None = None,
) -> AssessmentResult:
    """Mode-appropriate retrieval, one assessment call, parsed report."""
    text = config_text.decode("utf-8") if isinstance(config_text, bytes) else config_text
    try:
        doc = parse_config(text)
    except ParseError as exc:
        raise ConfigInputError(f"configuration does not parse: {exc}") from exc

    started = runtime.timer() if runtime.timer else None
    provider_latency = 0.0
    mode_used = mode
    plan: QueryPlan | None = None
    retrieved: tuple[RetrievalResult, ...] = ()

    if mode is RetrievalMode.AGENTIC_RAG:
        try:
            plan, latency = generate_queries(runtime, text)
            provider_latency += latency
            retrieved = retrieve_for_plan(runtime, plan, text)
        except EmptyPlan:
            logger.warning("query generator produced an empty plan; falling back to plain RAG")
            runtime.log({"event": "fallback", "from": mode.value, "to": RetrievalMode.PLAIN_RAG.value, "reason": "empty-plan"})
            mode_used = RetrievalMode.PLAIN_RAG
            retrieved = _plain_retrieval(runtime, text)
    elif mode is RetrievalMode.PLAIN_RAG:
        if runtime.settings.plain_rag_query_source == "model":
            try:
                plan, latency = generate_queries(runtime, text)
                plan = QueryPlan(queries=plan.queries, generated_by=QueryOrigin.ASSESSMENT_AGENT)
                provider_latency += latency
                retrieved = retrieve_for_plan(runtime, plan, text)
            except EmptyPlan:
                retrieved = _plain_retrieval(runtime, text)
        else:
            retrieved = _plain_retrieval(runtime, text)

    messages = build_prompts(
        text,
        retrieved,
        feedback=feedback,
        extra_context=extra_context,
        char_budget=runtime.settings.prompt_char_budget,
    )
    exchange = runtime.chat.chat(messages)
    provider_latency += exchange.latency_s
    runtime.log(
        {
            "event": "chat",
            "purpose": "assessment",
            "mode": mode_used.value,
            "fingerprint": fingerprint(runtime.chat.model_name, messages),
            "latency_ms": exchange.latency_s * 1000.0,
        }
    )
    report = resolve_violation_paths(parse_report(exchange.response_text), doc)
    latency = (runtime.timer() - started) if started is not None else provider_latency
    return AssessmentResult(
        report=report,
        mode_requested=mode,
        mode_used=mode_used,
        retrieved=retrieved,
        query_plan=plan,
        latency_s=latency,
    )


def reflect(runtime: AgentRuntime, original_config: str, report: ComplianceReport) -> tuple[ReflectionFeedback, float]:
    messages = build_reflection_prompts(original_config, report)
    exchange = runtime.chat.chat(messages)
    runtime.log(
        {
            "event": "chat",
            "purpose": "reflection",
            "fingerprint": fingerprint(runtime.chat.model_name, messages),
            "latency_ms": exchange.latency_s * 1000.0,
        }
    )
    return parse_reflection(exchange.response_text), exchange.latency_s


def run_compliance_loop(
    runtime: AgentRuntime,
    config_text: str | bytes,
    mode: RetrievalMode,
    max_iterations: int = 3,
    prior_compliant: bytes | None = None,
    extra_context: str | None = None,
) -> LoopOutcome:
    """Assess, reflect, repeat until the reflection converges or the
    iteration budget is exhausted. From iteration two onward the previous
    reflection feedback is injected into the assessment prompt."""
    if max_iterations < 1:
        raise ValueError("max_iterations must be >= 1")
    text = config_text.decode("utf-8") if isinstance(config_text, bytes) else config_text

    feedback: ReflectionFeedback | None = None
    reflections: list[ReflectionFeedback] = []
    assessments: list[AssessmentResult] = []
    for iteration in range(1, max_iterations + 1):
        result = assess_compliance(runtime, mode, text, feedback=feedback, extra_context=extra_context)
        assessments.append(result)
        feedback, _ = reflect(runtime, text, result.report)
        reflections.append(feedback)
        if feedback.converged():
            verified = (
                text.encode("utf-8")
                if result.report.status is ComplianceStatus.COMPLIANT
                else prior_compliant
            )
            return LoopOutcome(
                final_report=result.report,
                iterations_used=iteration,
                outcome=LoopResult.CONVERGED,
                last_verified_compliant=verified,
                reflection_history=tuple(reflections),
                assessments=tuple(assessments),
            )
    return LoopOutcome(
        final_report=assessments[-1].report,
        iterations_used=max_iterations,
        outcome=LoopResult.ESCALATED,
        last_verified_compliant=prior_compliant,
        reflection_history=tuple(reflections),
        assessments=tuple(assessments),
    )


# -- component registry and trigger dispatch ---------------------------------


@dataclass
class ComponentRecord:
    component_id: str
    config_text: bytes
    last_verified_compliant: bytes | None = None


class ComponentRegistry:
    def __init__(self) -> None:
        self._components: dict[str, ComponentRecord] = {}

    def register(self, component_id: str, config_text: bytes | str) -> ComponentRecord:
        text = config_text.encode("utf-8") if isinstance(config_text, str) else config_text
        record = self._components.get(component_id)
        if record is None:
            record = ComponentRecord(component_id=component_id, config_text=text)
            self._components[component_id] = record
        else:
            record.config_text = text
        return record

    def get(self, component_id: str) -> ComponentRecord:
        try:
            return self._components[component_id]
        except KeyError:
            raise TriggerRejected(f"unknown component {component_id!r}") from None

    def __contains__(self, component_id: str) -> bool:
        return component_id in self._components

    def items(self) -> list[tuple[str, ComponentRecord]]:
        return sorted(self._components.items())


def dispatch_trigger(
    runtime: AgentRuntime,
    trigger: Trigger,
    registry: ComponentRegistry,
    mode: RetrievalMode = RetrievalMode.AGENTIC_RAG,
    max_iterations: int = 3,
    ingest: Callable[[object], None] | None = None,
) -> list[tuple[str, LoopOutcome]]:
    """Route a trigger to the loop runs it implies.

    Policy updates re-ingest (via the callback) and re-assess every
    registered component; code submissions run once on the submitted text;
    runtime events re-assess the affected components with the event
    pattern injected into the prompt context.
    """
    runs: list[tuple[str, LoopOutcome]] = []
    if trigger.kind is TriggerKind.POLICY_UPDATE:
        if ingest is not None:
            ingest(trigger.payload)
        for component_id, record in registry.items():
            outcome = run_compliance_loop(
                runtime,
                record.config_text,
                mode,
                max_iterations=max_iterations,
                prior_compliant=record.last_verified_compliant,
            )
            runs.append((component_id, outcome))
    elif trigger.kind is TriggerKind.CODE_SUBMISSION:
        submission = trigger.payload
        if not isinstance(submission, CodeSubmission):
            raise TriggerRejected("code-submission trigger requires a CodeSubmission payload")
        record = registry.register(submission.component_id, submission.config_text)
        outcome = run_compliance_loop(
            runtime,
            submission.config_text,
            mode,
            max_iterations=max_iterations,
            prior_compliant=record.last_verified_compliant,
        )
        runs.append((submission.component_id, outcome))
    elif trigger.kind is TriggerKind.RUNTIME_EVENT:
        pattern = trigger.payload
        component_ids = sorted(getattr(pattern, "component_ids", ()))
        if not component_ids:
            raise TriggerRejected("runtime-event trigger names no components")
        summary = getattr(pattern, "summary", None) or str(pattern)
        for component_id in component_ids:
            record = registry.get(component_id)
            outcome = run_compliance_loop(
                runtime,
                record.config_text,
                mode,
                max_iterations=max_iterations,
                prior_compliant=record.last_verified_compliant,
                extra_context=summary,
            )
            runs.append((component_id, outcome))
    else:  # pragma: no cover - enum is closed
        raise TriggerRejected(f"unsupported trigger kind {trigger.kind}")
    return runs
