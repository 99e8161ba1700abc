from __future__ import annotations

from pathlib import Path

import pytest

from ranguard import fixtures
from ranguard.providers import MockHashEmbedder


@pytest.fixture(scope="session")
def golden_config() -> bytes:
    return fixtures.golden_config()


@pytest.fixture(scope="session")
def golden_corrected() -> bytes:
    return fixtures.golden_corrected_config()


@pytest.fixture(scope="session")
def embedder() -> MockHashEmbedder:
    return fixtures.golden_embedder()


@pytest.fixture()
def corpus_store(embedder):
    return fixtures.build_corpus_store(embedder)


@pytest.fixture(scope="session")
def golden_transcript_path(tmp_path_factory) -> Path:
    path = tmp_path_factory.mktemp("transcripts") / "golden.jsonl"
    fixtures.record_golden_transcript(path)
    return path


@pytest.fixture(scope="session")
def fixture_configs() -> list[tuple[str, str]]:
    return fixtures.benchmark_configs()
