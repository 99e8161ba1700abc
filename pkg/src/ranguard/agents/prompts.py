"""Prompt assembly for the assessment, reflection, and query-generator agents.

The default system prompts live as versioned text assets next to this
module. Assembly is deterministic: same inputs, same message sequence,
same request fingerprint.
"""

from __future__ import annotations

import json
from importlib import resources
from typing import Sequence

from ranguard.agents.report import ComplianceReport, ReflectionFeedback
from ranguard.kb.search import RetrievalResult
from ranguard.providers import Message


class PromptTooLarge(Exception):
    """The configuration alone exceeds the prompt character budget."""


def _asset(name: str) -> str:
    return resources.files("ranguard.agents").joinpath("assets", name).read_text(encoding="utf-8")


ASSESSMENT_SYSTEM_PROMPT = _asset("assessment_system.txt")
REFLECTION_SYSTEM_PROMPT = _asset("reflection_system.txt")
QUERY_GENERATOR_SYSTEM_PROMPT = _asset("query_generator_system.txt")

DEFAULT_CHAR_BUDGET = 200_000


def _chunk_block(index: int, result: RetrievalResult) -> str:
    # Chunk metadata is exposed under the key "Filename".
    return f"[{index}] Filename: {result.chunk.filename}\n{result.chunk.text.strip()}"


def _fenced(text: str) -> str:
    body = text if text.endswith("\n") else text + "\n"
    return f"```\n{body}```"


def build_prompts(
    config_text: str,
    retrieved: Sequence[RetrievalResult],
    feedback: ReflectionFeedback | None = None,
    extra_context: str | None = None,
    char_budget: int = DEFAULT_CHAR_BUDGET,
) -> tuple[Message, ...]:
    """Assemble the assessment request: system prompt, filename-tagged
    retrieval passages in rank order, the fenced configuration, and the
    previous reflection feedback as its own message.

    When the budget is exceeded, retrieved passages are dropped from the
    tail; the configuration itself is never truncated.
    """
    config_block = f"Configuration under assessment:\n{_fenced(config_text)}"
    context_block = f"Runtime security event context:\n{extra_context.strip()}\n\n" if extra_context else ""

    messages: list[Message] = [Message("system", ASSESSMENT_SYSTEM_PROMPT)]
    feedback_message = (
        Message(
            "user",
            "Previous Reflection Feedback:\n"
            + json.dumps(feedback.to_dict(), indent=2, ensure_ascii=True),
        )
        if feedback is not None
        else None
    )

    kept = list(retrieved)
    while True:
        if kept:
            passages = "Retrieved specification passages:\n\n" + "\n\n".join(
                _chunk_block(i, r) for i, r in enumerate(kept, start=1)
            )
            user_content = f"{passages}\n\n{context_block}{config_block}"
        else:
            user_content = f"{context_block}{config_block}"
        total = sum(len(m.content) for m in messages) + len(user_content)
        if feedback_message is not None:
            total += len(feedback_message.content)
        if total <= char_budget:
            break
        if not kept:
            raise PromptTooLarge(
                f"prompt is {total} chars with no passages left to drop (budget {char_budget})"
            )
        kept.pop()

    messages.append(Message("user", user_content))
    if feedback_message is not None:
        messages.append(feedback_message)
    return tuple(messages)


def build_reflection_prompts(original_config: str, report: ComplianceReport) -> tuple[Message, ...]:
    parts = [
        f"Original configuration:\n{_fenced(original_config)}",
        f"Compliance assessment output:\n{report.raw_text.strip()}",
    ]
    if report.corrected_config is not None:
        parts.append(f"Corrected configuration:\n{_fenced(report.corrected_config.decode('utf-8'))}")
    return (
        Message("system", REFLECTION_SYSTEM_PROMPT),
        Message("user", "\n\n".join(parts)),
    )


def build_query_prompts(config_text: str) -> tuple[Message, ...]:
    return (
        Message("system", QUERY_GENERATOR_SYSTEM_PROMPT),
        Message("user", f"Configuration:\n{_fenced(config_text)}"),
    )
