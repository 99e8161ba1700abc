"""Development server seeded with the recorded golden run.

Used by the dashboard's end-to-end tests and for local demos:

    python3 -m ranguard.service.devserver --state-dir /tmp/ranguard-dev --port 8470
"""

from __future__ import annotations

import argparse
from pathlib import Path

from ranguard import fixtures
from ranguard.providers import ReplayChatProvider
from ranguard.service.config import ServiceConfig
from ranguard.service.state import ServiceState

GOLDEN_COMPONENT = fixtures.GOLDEN_COMPONENT


def seed_state(state_dir: Path, synchronous: bool = True) -> ServiceState:
    """Build a service state whose queue holds the golden pending action."""
    state_dir.mkdir(parents=True, exist_ok=True)
    target = state_dir / "targets" / "cu_gnb.conf"
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_bytes(fixtures.golden_config())

    transcript = state_dir / "golden_transcript.jsonl"
    fixtures.record_golden_transcript(transcript)

    config = ServiceConfig(
        state_dir=state_dir,
        model_name=fixtures.GOLDEN_MODEL,
        provider_kind="replay",
        transcript_path=transcript,
        embedder_dimension=fixtures.GOLDEN_EMBEDDER_DIMENSION,
        embedder_seed=fixtures.GOLDEN_EMBEDDER_SEED,
        components={GOLDEN_COMPONENT: target},
    )
    embedder = config.embedder()
    store = fixtures.build_corpus_store(embedder)
    store.path = state_dir / "store.jsonl"
    state = ServiceState(
        config,
        chat=ReplayChatProvider(transcript, model_name=fixtures.GOLDEN_MODEL),
        embedder=embedder,
        store=store,
        synchronous=synchronous,
    )
    state.save_store()
    if not state.queue.pending():
        state.submit_assessment(GOLDEN_COMPONENT, fixtures.golden_config().decode("utf-8"))
    return state


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--state-dir", required=True)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8470)
    args = parser.parse_args()

    import uvicorn

    from ranguard.service.app import create_app

    state = seed_state(Path(args.state_dir))
    uvicorn.run(create_app(state), host=args.host, port=args.port, log_level="warning")


if __name__ == "__main__":
    main()
