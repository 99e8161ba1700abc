"""Packaged sample data: the worked CU example, a small standards corpus,
labelled benchmark configs, and a builder for the recorded golden
transcript that drives offline end-to-end runs."""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path
from typing import Sequence

from ranguard.agents.core import AgentRuntime, RetrievalMode, RetrievalSettings, run_compliance_loop
from ranguard.agents.prompts import (
    ASSESSMENT_SYSTEM_PROMPT,
    QUERY_GENERATOR_SYSTEM_PROMPT,
    REFLECTION_SYSTEM_PROMPT,
)
from ranguard.agents.report import ComplianceStatus
from ranguard.bench import GroundTruth
from ranguard.kb.pipeline import ingest_text
from ranguard.kb.store import KnowledgeStore
from ranguard.providers import (
    Message,
    MockHashEmbedder,
    RecordingChatProvider,
    ScriptedChatProvider,
    Transcript,
)

GOLDEN_COMPONENT = "cu-gnb"
GOLDEN_MODEL = "gpt-4.1-mini"
GOLDEN_EMBEDDER_DIMENSION = 256
GOLDEN_EMBEDDER_SEED = 7

_DATA = resources.files("ranguard.fixtures").joinpath("data")


def data_path(name: str) -> Path:
    """Filesystem path of a packaged fixture (the package is installed
    from source, so resources are real files)."""
    return Path(str(_DATA.joinpath(name)))


def read_text(name: str) -> str:
    return _DATA.joinpath(name).read_text(encoding="utf-8")


def read_bytes(name: str) -> bytes:
    return _DATA.joinpath(name).read_bytes()


def golden_config() -> bytes:
    return read_bytes("cu_gnb.conf")


def golden_corrected_config() -> bytes:
    return read_bytes("cu_gnb_corrected.conf")


def golden_assessment_response() -> str:
    """The recorded assessment output: sectioned analysis plus the full
    corrected configuration in a ```corrected fence."""
    sections = read_text("assessment_sections.txt").rstrip("\n")
    corrected = golden_corrected_config().decode("utf-8")
    return f"{sections}\n\n```corrected\n{corrected}```\n"


def golden_reflection_response() -> str:
    return read_text("reflection_response.json")


def golden_query_response() -> str:
    return read_text("query_response.txt")


def corpus_dir() -> Path:
    return data_path("corpus")


def benchmark_configs() -> list[tuple[str, str]]:
    names = ["cu_gnb.conf", "cu_gnb_hardened.conf", "du_gnb.conf", "gnb_sa.conf"]
    return [(name, read_text(name)) for name in names]


def ground_truths() -> dict[str, GroundTruth]:
    data = json.loads(read_text("ground_truth.json"))
    truths: dict[str, GroundTruth] = {}
    for entry in data["configs"]:
        truths[entry["config_id"]] = GroundTruth(
            config_id=entry["config_id"],
            expected_status=ComplianceStatus(entry["expected_status"]),
            expected_violation_paths=frozenset(entry["expected_violation_paths"]),
            reference_report_text=entry.get("reference_report"),
        )
    return truths


def table_trials_path() -> Path:
    return data_path("table_trials.json")


def golden_embedder(dimension: int = GOLDEN_EMBEDDER_DIMENSION, seed: int = GOLDEN_EMBEDDER_SEED) -> MockHashEmbedder:
    return MockHashEmbedder(dimension=dimension, seed=seed)


def build_corpus_store(
    embedder: MockHashEmbedder | None = None,
    extra_documents: Sequence[tuple[str, str]] = (),
) -> KnowledgeStore:
    """Ingest the packaged standards corpus into a fresh in-memory store."""
    embedder = embedder or golden_embedder()
    store = KnowledgeStore(dimension=embedder.dimension, embedder_id=embedder.embedder_id)
    for path in sorted(corpus_dir().iterdir()):
        if path.suffix.lower() in (".md", ".txt"):
            ingest_text(store, path.read_text(encoding="utf-8"), path.name, embedder, source=str(path))
    for filename, text in extra_documents:
        ingest_text(store, text, filename, embedder)
    return store


def golden_scripted_provider(model_name: str = GOLDEN_MODEL) -> ScriptedChatProvider:
    """Routes on the system prompt: query generation, assessment, reflection."""
    query_response = golden_query_response()
    assessment_response = golden_assessment_response()
    reflection_response = golden_reflection_response()

    def respond(messages: Sequence[Message]) -> str:
        system = messages[0].content
        if system == QUERY_GENERATOR_SYSTEM_PROMPT:
            return query_response
        if system == ASSESSMENT_SYSTEM_PROMPT:
            return assessment_response
        if system == REFLECTION_SYSTEM_PROMPT:
            return reflection_response
        raise AssertionError("unexpected system prompt in golden run")

    return ScriptedChatProvider(model_name=model_name, respond=respond)


def record_golden_transcript(
    path: Path | str,
    mode: RetrievalMode = RetrievalMode.AGENTIC_RAG,
    settings: RetrievalSettings | None = None,
) -> Path:
    """Run the golden CU loop against the scripted provider, recording every
    exchange, and save the transcript for later replay."""
    embedder = golden_embedder()
    store = build_corpus_store(embedder)
    recorder = RecordingChatProvider(golden_scripted_provider())
    runtime = AgentRuntime(
        chat=recorder,
        embedder=embedder,
        store=store,
        settings=settings or RetrievalSettings(),
    )
    outcome = run_compliance_loop(runtime, golden_config(), mode)
    if outcome.final_report.corrected_config != golden_corrected_config():
        raise AssertionError("golden run did not reproduce the corrected configuration")
    return recorder.save(path)


def load_transcript(path: Path | str) -> Transcript:
    return Transcript.load(path)
