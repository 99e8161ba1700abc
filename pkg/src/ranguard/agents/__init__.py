"""Agentic core: retrieval planning, compliance assessment, reflection,
and the assess/reflect convergence loop."""

from ranguard.agents.core import (
    AgentRuntime,
    AssessmentResult,
    CodeSubmission,
    ComponentRecord,
    ComponentRegistry,
    ConfigInputError,
    EmptyPlan,
    LoopOutcome,
    LoopResult,
    QueryOrigin,
    QueryPlan,
    RetrievalMode,
    RetrievalSettings,
    RunLog,
    Trigger,
    TriggerKind,
    TriggerRejected,
    assess_compliance,
    dispatch_trigger,
    generate_queries,
    reflect,
    retrieve_for_plan,
    run_compliance_loop,
    split_query_sentences,
)
from ranguard.agents.prompts import (
    ASSESSMENT_SYSTEM_PROMPT,
    QUERY_GENERATOR_SYSTEM_PROMPT,
    REFLECTION_SYSTEM_PROMPT,
    PromptTooLarge,
    build_prompts,
    build_query_prompts,
    build_reflection_prompts,
)
from ranguard.agents.report import (
    ComplianceReport,
    ComplianceStatus,
    FeedbackParseError,
    IssueType,
    ReflectionFeedback,
    ReflectionIssue,
    ReportParseError,
    SpecReference,
    Violation,
    parse_reflection,
    parse_report,
    resolve_violation_paths,
)

__all__ = [
    "ASSESSMENT_SYSTEM_PROMPT",
    "AgentRuntime",
    "AssessmentResult",
    "CodeSubmission",
    "ComplianceReport",
    "ComplianceStatus",
    "ComponentRecord",
    "ComponentRegistry",
    "ConfigInputError",
    "EmptyPlan",
    "FeedbackParseError",
    "IssueType",
    "LoopOutcome",
    "LoopResult",
    "PromptTooLarge",
    "QUERY_GENERATOR_SYSTEM_PROMPT",
    "QueryOrigin",
    "QueryPlan",
    "REFLECTION_SYSTEM_PROMPT",
    "ReflectionFeedback",
    "ReflectionIssue",
    "ReportParseError",
    "RetrievalMode",
    "RetrievalSettings",
    "RunLog",
    "SpecReference",
    "Trigger",
    "TriggerKind",
    "TriggerRejected",
    "Violation",
    "assess_compliance",
    "build_prompts",
    "build_query_prompts",
    "build_reflection_prompts",
    "dispatch_trigger",
    "generate_queries",
    "parse_reflection",
    "parse_report",
    "reflect",
    "resolve_violation_paths",
    "retrieve_for_plan",
    "run_compliance_loop",
    "split_query_sentences",
]
