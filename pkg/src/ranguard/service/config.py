"""Declarative service configuration (one YAML file; env vars only for secrets)."""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import timedelta
from pathlib import Path

import yaml

from ranguard.agents.core import RetrievalMode, RetrievalSettings
from ranguard.enforcement import EnforcementPolicy
from ranguard.events import CorrelationRule, EventCategory
from ranguard.policy_hub import PolicySource, SourceKind
from ranguard.providers import (
    ChatProvider,
    HttpChatProvider,
    MockHashEmbedder,
    ProviderConfig,
    ReplayChatProvider,
)

MODE_NAMES = {
    "norag": RetrievalMode.NO_RAG,
    "no-rag": RetrievalMode.NO_RAG,
    "rag": RetrievalMode.PLAIN_RAG,
    "plain": RetrievalMode.PLAIN_RAG,
    "agentic": RetrievalMode.AGENTIC_RAG,
    "agentic-rag": RetrievalMode.AGENTIC_RAG,
}


def parse_mode(name: str) -> RetrievalMode:
    try:
        return MODE_NAMES[name.strip().lower()]
    except KeyError:
        raise ValueError(f"unknown retrieval mode {name!r}; choose from {sorted(MODE_NAMES)}") from None


@dataclass
class ServiceConfig:
    state_dir: Path = Path("ranguard-state")
    mode: RetrievalMode = RetrievalMode.AGENTIC_RAG
    max_iterations: int = 3
    model_name: str = "gpt-4.1-mini"
    provider_kind: str = "replay"  # replay | http
    provider_base_url: str = ""
    provider_api_key_env: str = ""
    provider_timeout_s: float = 120.0
    provider_temperature: float = 0.0
    provider_max_retries: int = 3
    transcript_path: Path | None = None
    embedder_dimension: int = 256
    embedder_seed: int = 7
    retrieval: RetrievalSettings = field(default_factory=RetrievalSettings)
    policy: EnforcementPolicy = field(default_factory=EnforcementPolicy)
    feedback_ingestion: bool = True
    components: dict[str, Path] = field(default_factory=dict)
    hub_sources: list[PolicySource] = field(default_factory=list)
    correlation_rules: list[CorrelationRule] = field(default_factory=list)
    boilerplate_patterns: tuple[str, ...] = ()

    def chat_provider(self) -> ChatProvider:
        if self.provider_kind == "http":
            return HttpChatProvider(
                ProviderConfig(
                    base_url=self.provider_base_url,
                    model_name=self.model_name,
                    api_key_env=self.provider_api_key_env,
                    timeout_s=self.provider_timeout_s,
                    temperature=self.provider_temperature,
                    max_retries=self.provider_max_retries,
                )
            )
        if self.provider_kind == "replay":
            if self.transcript_path is None:
                raise ValueError("replay provider needs a transcript path")
            return ReplayChatProvider(self.transcript_path, model_name=self.model_name)
        raise ValueError(f"unknown provider kind {self.provider_kind!r}")

    def embedder(self) -> MockHashEmbedder:
        return MockHashEmbedder(dimension=self.embedder_dimension, seed=self.embedder_seed)


def load_config(path: Path | str) -> ServiceConfig:
    data = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    base = Path(path).resolve().parent

    def resolve(p: str) -> Path:
        candidate = Path(p)
        return candidate if candidate.is_absolute() else base / candidate

    config = ServiceConfig()
    if "state_dir" in data:
        config.state_dir = resolve(str(data["state_dir"]))
    if "mode" in data:
        config.mode = parse_mode(str(data["mode"]))
    config.max_iterations = int(data.get("max_iterations", config.max_iterations))

    provider = data.get("provider", {}) or {}
    config.provider_kind = str(provider.get("kind", config.provider_kind))
    config.model_name = str(provider.get("model_name", config.model_name))
    config.provider_base_url = str(provider.get("base_url", config.provider_base_url))
    config.provider_api_key_env = str(provider.get("api_key_env", config.provider_api_key_env))
    config.provider_timeout_s = float(provider.get("timeout_s", config.provider_timeout_s))
    config.provider_temperature = float(provider.get("temperature", config.provider_temperature))
    config.provider_max_retries = int(provider.get("max_retries", config.provider_max_retries))
    if provider.get("transcript"):
        config.transcript_path = resolve(str(provider["transcript"]))

    embedder = data.get("embedder", {}) or {}
    config.embedder_dimension = int(embedder.get("dimension", config.embedder_dimension))
    config.embedder_seed = int(embedder.get("seed", config.embedder_seed))

    retrieval = data.get("retrieval", {}) or {}
    config.retrieval = RetrievalSettings(
        k=int(retrieval.get("k", 8)),
        k_total=int(retrieval.get("k_total", 12)),
        max_queries=int(retrieval.get("max_queries", 8)),
        prompt_char_budget=int(retrieval.get("prompt_char_budget", 200_000)),
        plain_rag_query_source=str(retrieval.get("plain_rag_query_source", "config")),
    )

    policy = data.get("policy", {}) or {}
    config.policy = EnforcementPolicy(
        require_human_approval=bool(policy.get("require_human_approval", True)),
        auto_apply=bool(policy.get("auto_apply", False)),
        rollback_enabled=bool(policy.get("rollback_enabled", True)),
    )
    config.feedback_ingestion = bool(policy.get("feedback_ingestion", True))

    for component_id, target in (data.get("components", {}) or {}).items():
        config.components[str(component_id)] = resolve(str(target))

    for source in data.get("hub_sources", []) or []:
        kind = SourceKind(str(source.get("kind", "directory")))
        location: str | tuple[str, ...]
        if kind is SourceKind.URL_LIST:
            location = tuple(source.get("urls", []))
        else:
            location = str(resolve(str(source["location"])))
        config.hub_sources.append(
            PolicySource(
                source_id=str(source["source_id"]),
                kind=kind,
                location=location,
                poll_interval=timedelta(seconds=float(source.get("poll_interval_s", 21600))),
            )
        )

    for rule in data.get("correlation_rules", []) or []:
        config.correlation_rules.append(
            CorrelationRule(
                rule_id=str(rule["rule_id"]),
                category=EventCategory(str(rule["category"])),
                attributes={str(k): str(v) for k, v in (rule.get("attributes", {}) or {}).items()},
                threshold=int(rule["threshold"]),
                window=timedelta(seconds=float(rule["window_s"])),
            )
        )

    config.boilerplate_patterns = tuple(str(p) for p in data.get("cleaning_patterns", []) or [])
    return config
