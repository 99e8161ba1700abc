"""Command line interface; verbs mirror the HTTP surface and module ops."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from ranguard.agents.core import AgentRuntime, RetrievalMode, run_compliance_loop
from ranguard.agents.report import render_markdown
from ranguard.bench import render_table, replay_table_check
from ranguard.gnbconf import diff_configs
from ranguard.kb.pipeline import ingest_directory
from ranguard.kb.store import KnowledgeStore
from ranguard.providers import MockHashEmbedder, ReplayChatProvider
from ranguard.service.config import ServiceConfig, load_config, parse_mode


class DomainError(click.ClickException):
    exit_code = 1


def _load_service_config(config_path: str | None) -> ServiceConfig:
    if config_path:
        return load_config(config_path)
    return ServiceConfig()


def _open_store(store_path: str, embedder: MockHashEmbedder, must_exist: bool) -> KnowledgeStore:
    path = Path(store_path)
    if path.exists():
        return KnowledgeStore.load(path)
    if must_exist:
        raise DomainError(f"knowledge store not found: {path}")
    return KnowledgeStore(dimension=embedder.dimension, embedder_id=embedder.embedder_id, path=path)


def _runtime(store_path: str, replay: str | None, model: str, dimension: int, seed: int) -> AgentRuntime:
    embedder = MockHashEmbedder(dimension=dimension, seed=seed)
    store = _open_store(store_path, embedder, must_exist=True)
    if not replay:
        raise DomainError("offline runs need --replay TRANSCRIPT (configure an http provider for live runs)")
    chat = ReplayChatProvider(replay, model_name=model)
    return AgentRuntime(chat=chat, embedder=embedder, store=store)


@click.group()
def main() -> None:
    """Security compliance engine for RAN configuration files."""


@main.command()
@click.argument("directory", type=click.Path(exists=True, file_okay=False))
@click.option("--store", "store_path", default="store.jsonl", show_default=True, help="Knowledge store file.")
@click.option("--dimension", default=256, show_default=True)
@click.option("--seed", default=7, show_default=True)
def ingest(directory: str, store_path: str, dimension: int, seed: int) -> None:
    """Ingest a directory of .txt/.md standards documents."""
    embedder = MockHashEmbedder(dimension=dimension, seed=seed)
    store = _open_store(store_path, embedder, must_exist=False)
    try:
        count = ingest_directory(store, directory, embedder)
    except Exception as exc:
        raise DomainError(f"ingestion failed: {exc}") from exc
    store.persist(store_path)
    click.echo(f"ingested {count} chunks from {directory} into {store_path}")


_MODE_CHOICES = click.Choice(["norag", "rag", "agentic"], case_sensitive=False)


@main.command()
@click.argument("config_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--mode", default="agentic", type=_MODE_CHOICES, show_default=True)
@click.option("--store", "store_path", default="store.jsonl", show_default=True)
@click.option("--replay", "replay_path", type=click.Path(exists=True, dir_okay=False), help="Transcript for offline replay.")
@click.option("--model", default="gpt-4.1-mini", show_default=True)
@click.option("--dimension", default=256, show_default=True)
@click.option("--seed", default=7, show_default=True)
def assess(config_file: str, mode: str, store_path: str, replay_path: str | None, model: str, dimension: int, seed: int) -> None:
    """Assess one configuration file and print the rendered report."""
    from ranguard.agents.core import ConfigInputError, assess_compliance
    from ranguard.agents.report import ReportParseError

    runtime = _runtime(store_path, replay_path, model, dimension, seed)
    text = Path(config_file).read_text(encoding="utf-8")
    try:
        result = assess_compliance(runtime, parse_mode(mode), text)
    except (ConfigInputError, ReportParseError) as exc:
        raise DomainError(str(exc)) from exc
    click.echo(render_markdown(result.report), nl=False)


@main.command()
@click.argument("config_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--mode", default="agentic", type=_MODE_CHOICES, show_default=True)
@click.option("--store", "store_path", default="store.jsonl", show_default=True)
@click.option("--replay", "replay_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--model", default="gpt-4.1-mini", show_default=True)
@click.option("--dimension", default=256, show_default=True)
@click.option("--seed", default=7, show_default=True)
@click.option("--max-iterations", default=3, show_default=True)
@click.option("--json", "as_json", is_flag=True, help="Print the full outcome as JSON.")
def loop(
    config_file: str,
    mode: str,
    store_path: str,
    replay_path: str | None,
    model: str,
    dimension: int,
    seed: int,
    max_iterations: int,
    as_json: bool,
) -> None:
    """Run the assess/reflect loop on one configuration file."""
    runtime = _runtime(store_path, replay_path, model, dimension, seed)
    text = Path(config_file).read_text(encoding="utf-8")
    try:
        outcome = run_compliance_loop(runtime, text, parse_mode(mode), max_iterations=max_iterations)
    except Exception as exc:
        raise DomainError(f"loop failed: {exc}") from exc
    if as_json:
        click.echo(json.dumps(outcome.to_dict(), indent=2, sort_keys=True))
        return
    click.echo(f"outcome: {outcome.outcome.value}")
    click.echo(f"iterations: {outcome.iterations_used}")
    click.echo(f"status: {outcome.final_report.status.value}")
    for path in sorted(outcome.final_report.violation_paths()):
        click.echo(f"violation: {path}")
    if outcome.final_report.corrected_config is not None:
        touched = diff_configs(text, outcome.final_report.corrected_config).touched_group_paths
        click.echo(f"touched groups: {', '.join(sorted(touched))}")
    click.echo(render_markdown(outcome.final_report), nl=False)


@main.command()
@click.option(
    "--trials",
    "trials_path",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="Recorded per-cell trial fixture (defaults to the packaged one).",
)
def bench(trials_path: str | None) -> None:
    """Render the benchmark table from recorded trial fixtures."""
    from ranguard.bench import FixtureMismatch

    if trials_path is None:
        from ranguard.fixtures import table_trials_path

        trials_path = str(table_trials_path())
    try:
        report = replay_table_check(trials_path)
    except FixtureMismatch as exc:
        raise DomainError(str(exc)) from exc
    click.echo(render_table(report), nl=False)


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8470, show_default=True)
def serve(config_path: str, host: str, port: int) -> None:
    """Run the HTTP service."""
    import uvicorn

    from ranguard.service.app import create_app
    from ranguard.service.state import ServiceState

    state = ServiceState(load_config(config_path))
    uvicorn.run(create_app(state), host=host, port=port, log_level="info")


@main.group()
def hub() -> None:
    """Policy intelligence hub."""


@hub.command("poll")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), required=True)
def hub_poll(config_path: str) -> None:
    """Poll all configured sources once and ingest any changes."""
    from ranguard.policy_hub import ChangeKind, PolicyHub
    from ranguard.kb.pipeline import ingest_text

    config = load_config(config_path)
    embedder = config.embedder()
    store_file = Path(config.state_dir) / "store.jsonl"
    store = _open_store(str(store_file), embedder, must_exist=False)

    def ingest_callback(event, content) -> None:
        if event.change is ChangeKind.REMOVED:
            store.mark_stale(event.filename)
        elif content is not None:
            ingest_text(store, content, event.filename, embedder, boilerplate_patterns=config.boilerplate_patterns)

    hub_state = PolicyHub(sources=config.hub_sources, ingest_callback=ingest_callback)
    events = hub_state.poll_once()
    store.persist(store_file)
    for event in events:
        click.echo(f"{event.change.value}: {event.filename}")
    click.echo(f"{len(events)} change(s)")


@main.group("events")
def events_group() -> None:
    """Security event analysis."""


@events_group.command("ingest")
@click.argument("event_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), required=True)
def events_ingest(event_file: str, config_path: str) -> None:
    """Correlate an event file against the configured rules."""
    from ranguard.events import correlate, ingest_events, raise_triggers

    config = load_config(config_path)
    result = ingest_events(event_file)
    patterns = correlate(result.events, config.correlation_rules)
    triggers = raise_triggers(patterns)
    click.echo(f"events: {len(result.events)}  rejects: {len(result.rejects)}")
    for pattern in patterns:
        click.echo(pattern.summary)
    click.echo(f"{len(triggers)} trigger(s) raised")


@main.command()
@click.argument("action_id")
@click.option("--operator", required=True)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--reject", "reject_flag", is_flag=True, help="Reject instead of approving.")
def approve(action_id: str, operator: str, config_path: str, reject_flag: bool) -> None:
    """Decide a pending remediation (approve applies it when policy permits)."""
    from ranguard.enforcement import EnforcementError
    from ranguard.service.state import ServiceState

    state = ServiceState(load_config(config_path), synchronous=True)
    try:
        action = state.decide_action(action_id, not reject_flag, operator)
    except EnforcementError as exc:
        raise DomainError(str(exc)) from exc
    click.echo(f"{action.action_id}: {action.state.value}")


@main.command()
@click.argument("component_id")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), required=True)
def rollback(component_id: str, config_path: str) -> None:
    """Restore a component to its last safe configuration."""
    from ranguard.enforcement import EnforcementError
    from ranguard.service.state import ServiceState

    state = ServiceState(load_config(config_path), synchronous=True)
    try:
        action = state.rollback_component(component_id)
    except EnforcementError as exc:
        raise DomainError(str(exc)) from exc
    click.echo(f"{action.action_id}: {action.state.value}")


if __name__ == "__main__":
    sys.exit(main())
