"""Acceptance suite: one test per release criterion, each printing a
pass/fail line with its runtime against the stated budget."""

from __future__ import annotations

import json
import math
import random
import re
import socket
import time

import numpy as np
import pytest
from click.testing import CliRunner

from ranguard import fixtures
from ranguard.agents.core import (
    AgentRuntime,
    LoopResult,
    RetrievalMode,
    run_compliance_loop,
)
from ranguard.bench import accuracy_cells, replay_table_check, token_f1
from ranguard.gnbconf import diff_configs, extract_security_profile, parse_config
from ranguard.kb import Chunk, KnowledgeStore, chunk_text, clean, extract, search
from ranguard.kb.store import EmbeddedChunk, normalize
from ranguard.kb.search import cosine_similarity
from ranguard.providers import MockHashEmbedder, ScriptedChatProvider
from ranguard.service.cli import main as cli_main

from tests.test_agents_core import (
    CONVERGED_REFLECTION,
    NON_COMPLIANT_TEMPLATE,
    SIMPLE_CONFIG,
    SIMPLE_CORRECTED,
    RoleRouter,
    make_runtime,
    one_issue_reflection,
)
from tests.test_search import scalar_cosine


def report_line(name: str, elapsed: float, budget: float) -> None:
    print(f"ACCEPTANCE PASS {name}: {elapsed:.2f}s (budget {budget:.0f}s)")


class timed:
    def __init__(self, name: str, budget: float):
        self.name = name
        self.budget = budget

    def __enter__(self):
        self.started = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            elapsed = time.perf_counter() - self.started
            assert elapsed < self.budget, f"{self.name} took {elapsed:.2f}s, budget {self.budget}s"
            report_line(self.name, elapsed, self.budget)
        else:
            print(f"ACCEPTANCE FAIL {self.name}")
        return False


def test_golden_end_to_end_cli(golden_transcript_path, tmp_path, monkeypatch):
    """Recorded-transcript agentic loop over the CU fixture via the CLI."""

    def no_network(*args, **kwargs):
        raise AssertionError("network use during replay run")

    monkeypatch.setattr(socket.socket, "connect", no_network)

    embedder = fixtures.golden_embedder()
    store = fixtures.build_corpus_store(embedder)
    store_path = tmp_path / "store.jsonl"
    store.persist(store_path)
    config_file = tmp_path / "cu_gnb.conf"
    config_file.write_bytes(fixtures.golden_config())

    with timed("golden-end-to-end", budget=5.0):
        runner = CliRunner()
        result = runner.invoke(
            cli_main,
            [
                "loop",
                str(config_file),
                "--mode",
                "agentic",
                "--store",
                str(store_path),
                "--replay",
                str(golden_transcript_path),
                "--json",
            ],
        )
        assert result.exit_code == 0, result.output
        outcome = json.loads(result.output)

        assert outcome["final_report"]["status"] == "Non-Compliant"
        violation_paths = {v["config_path"] for v in outcome["final_report"]["violations"]}
        assert violation_paths == {
            "security.ciphering_algorithms",
            "security.integrity_algorithms",
            "security.drb_integrity",
        }
        assert outcome["outcome"] == "converged"
        assert outcome["iterations_used"] == 1
        reflection = outcome["reflection_history"][0]
        assert reflection["Issues"] == [] and reflection["MustFixSummary"] == []

        corrected = outcome["final_report"]["corrected_config"].encode("utf-8")
        got = extract_security_profile(parse_config(corrected))
        want = extract_security_profile(parse_config(fixtures.golden_corrected_config()))
        assert got.ciphering_algorithms == want.ciphering_algorithms == ("nea2",)
        assert got.integrity_algorithms == want.integrity_algorithms == ("nia2",)
        assert got.drb_ciphering == want.drb_ciphering == "yes"
        assert got.drb_integrity == want.drb_integrity == "yes"

        diff = diff_configs(fixtures.golden_config(), corrected)
        assert diff.touched_group_paths == frozenset({"security"})


def test_table_reproduction():
    """Nine recorded accuracy cells render exactly as published."""
    with timed("table-reproduction", budget=10.0):
        report = replay_table_check(fixtures.table_trials_path())
        cells = accuracy_cells(report)
        expected = {
            ("GPT-4.1 Mini", "No-RAG"): "0.58",
            ("GPT-4.1 Mini", "RAG"): "0.25",
            ("GPT-4.1 Mini", "Agentic RAG"): "0.75",
            ("Gemini 2.5 Flash", "No-RAG"): "0.67",
            ("Gemini 2.5 Flash", "RAG"): "0.17",
            ("Gemini 2.5 Flash", "Agentic RAG"): "0.83",
            ("Mistral Large-latest", "No-RAG"): "0.50",
            ("Mistral Large-latest", "RAG"): "0.33",
            ("Mistral Large-latest", "Agentic RAG"): "0.67",
        }
        assert cells == expected
        assert sorted(cells.values()) == sorted(
            ["0.58", "0.67", "0.50", "0.25", "0.17", "0.33", "0.75", "0.83", "0.67"]
        )


def test_retrieval_oracle():
    """Top-k on a 1,000-chunk store equals the exhaustive-sort prefix; the
    cosine kernel agrees with a scalar-loop oracle to 1e-9."""
    with timed("retrieval-oracle", budget=30.0):
        dimension = 64
        provider = MockHashEmbedder(dimension=dimension, seed=13)
        store = KnowledgeStore(dimension=dimension, embedder_id=provider.embedder_id)
        rng = random.Random(13)
        vocabulary = [f"term{i}" for i in range(500)]
        texts = [" ".join(rng.choice(vocabulary) for _ in range(16)) for _ in range(1000)]
        vectors = provider.embed(texts)
        for index, (text, vector) in enumerate(zip(texts, vectors)):
            chunk = Chunk(filename=f"doc{index % 11}.md", ordinal=index // 11, text=text, char_range=(0, len(text)))
            store.entries[chunk.chunk_id] = EmbeddedChunk(
                chunk=chunk, vector=normalize(vector), embedder_id=provider.embedder_id
            )
        entries = store.active_entries()
        entry_vectors = [e.vector.tolist() for e in entries]
        ids = [e.chunk.chunk_id for e in entries]

        for _ in range(100):
            query = " ".join(rng.choice(vocabulary) for _ in range(6))
            query_vector = provider.embed([query])[0].tolist()
            scored = sorted(
                ((scalar_cosine(query_vector, v), cid) for v, cid in zip(entry_vectors, ids)),
                key=lambda pair: (-round(pair[0], 9), pair[1]),
            )
            for k in (1, 8, 64):
                got = [r.chunk.chunk_id for r in search(store, query, k, provider)]
                assert got == [cid for _, cid in scored[:k]], f"k={k} query={query!r}"

        pair_rng = np.random.default_rng(99)
        for _ in range(50):
            a = pair_rng.normal(size=1536)
            b = pair_rng.normal(size=1536)
            assert abs(cosine_similarity(a, b) - scalar_cosine(a, b)) < 1e-9


def _mutate(raw: bytes, rng: random.Random) -> bytes:
    """One grammar-preserving mutation of a config text."""
    lines = raw.decode("utf-8").splitlines(keepends=True)
    choice = rng.randrange(5)
    index = rng.randrange(len(lines))
    if choice == 0:  # swap a scalar value
        assignment = re.compile(r'^(\s*\w[\w-]*\s*=\s*)("[^"]*"|[\w.]+)(\s*;.*\n?)$')
        candidates = [i for i, l in enumerate(lines) if assignment.match(l)]
        if candidates:
            i = rng.choice(candidates)
            match = assignment.match(lines[i])
            replacement = rng.choice(['"changed"', "42", "0xbeef", '"nea3"'])
            lines[i] = f"{match.group(1)}{replacement}{match.group(3)}"
    elif choice == 1:  # insert a full-line comment
        marker = rng.choice(["#", "//"])
        lines.insert(index, f"{marker} mutation note {rng.randrange(10_000)}\n")
    elif choice == 2:  # insert blank lines
        lines.insert(index, "\n" * rng.randint(1, 3))
    elif choice == 3:  # re-indent a line
        lines[index] = " " * rng.randint(0, 6) + lines[index].lstrip(" ")
    else:  # trailing comment after a terminator
        candidates = [i for i, l in enumerate(lines) if l.rstrip().endswith(";")]
        if candidates:
            i = rng.choice(candidates)
            lines[i] = lines[i].rstrip("\n") + f" # trailing {rng.randrange(100)}\n"
    return "".join(lines).encode("utf-8")


def test_parser_round_trip_corpus_and_mutations(fixture_configs):
    """serialize(parse(f)) == f across fixtures and 120 generated variants."""
    with timed("parser-round-trip", budget=5.0):
        rng = random.Random(20260810)
        total = 0
        for name, text in fixture_configs:
            raw = text.encode("utf-8")
            assert parse_config(raw).serialize() == raw, name
            total += 1
            for _ in range(30):
                mutated = raw
                for _ in range(rng.randint(1, 4)):
                    mutated = _mutate(mutated, rng)
                assert parse_config(mutated).serialize() == mutated, name
                total += 1
        assert total >= 104  # 4 fixtures + >=100 variants


def test_loop_bound_and_convergence(embedder, corpus_store):
    """50 scripted adversarial reflection sequences respect the bound and
    the convergence definition."""
    with timed("loop-bound", budget=10.0):
        rng = random.Random(4242)
        response = NON_COMPLIANT_TEMPLATE.format(corrected=SIMPLE_CORRECTED)
        for index in range(50):
            max_iterations = rng.randint(1, 4)
            converge_at = rng.choice([None, 1, 2, 3, 4, 5])
            sequence = []
            for i in range(1, max_iterations + 2):
                if converge_at is not None and i >= converge_at:
                    sequence.append(CONVERGED_REFLECTION)
                else:
                    sequence.append(one_issue_reflection(f"{index}-{i}"))
            iterator = iter(sequence + [one_issue_reflection("overflow")] * 10)
            router = RoleRouter("Q about security.", response, lambda messages: next(iterator))
            runtime = make_runtime(router, embedder, corpus_store)
            prior = b"known good bytes" if rng.random() < 0.5 else None
            outcome = run_compliance_loop(
                runtime,
                SIMPLE_CONFIG,
                RetrievalMode.NO_RAG,
                max_iterations=max_iterations,
                prior_compliant=prior,
            )
            assert outcome.iterations_used <= max_iterations
            final = outcome.reflection_history[-1]
            if outcome.outcome is LoopResult.CONVERGED:
                assert final.converged()
                assert not final.issues and not final.must_fix_summary
                assert converge_at is not None and converge_at <= max_iterations
                assert outcome.iterations_used == converge_at
            else:
                assert outcome.outcome is LoopResult.ESCALATED
                assert not final.converged()
                assert outcome.iterations_used == max_iterations
                assert outcome.last_verified_compliant == prior


def test_exactly_once_query_generation(embedder, corpus_store):
    """Agentic assessments call the query generator exactly once each."""
    with timed("exactly-once-query-generation", budget=10.0):
        rng = random.Random(777)
        for run in range(20):
            converge_at = rng.randint(1, 3)
            reflections = [one_issue_reflection(f"{run}-{i}") for i in range(converge_at - 1)]
            reflections.append(CONVERGED_REFLECTION)
            iterator = iter(reflections + [one_issue_reflection("x")] * 5)
            response = NON_COMPLIANT_TEMPLATE.format(corrected=SIMPLE_CORRECTED)
            queries = "\n".join(f"Query {i} about nea0." for i in range(rng.randint(1, 5)))
            router = RoleRouter(queries, response, lambda messages: next(iterator))
            runtime = make_runtime(router, embedder, corpus_store)
            outcome = run_compliance_loop(
                runtime, SIMPLE_CONFIG, RetrievalMode.AGENTIC_RAG, max_iterations=3
            )
            assessments = router.assessment_calls
            assert router.query_calls == assessments == outcome.iterations_used


def test_enforcement_safety():
    """Randomized 500-step walks: legal transitions only, byte-exact
    apply/rollback, audit chain intact throughout, tamper detected."""
    from ranguard.enforcement import (
        ActionQueue,
        ActionState,
        AuditLog,
        DuplicateInFlight,
        EnforcementPolicy,
        InvalidTransition,
        LEGAL_TRANSITIONS,
        NoSafeSnapshot,
        RecordingAdapter,
        UnknownAction,
        verify_audit_chain,
    )
    from tests.test_enforcement import golden_outcome

    with timed("enforcement-safety", budget=20.0):
        rng = random.Random(555)
        policy = EnforcementPolicy()
        auto = EnforcementPolicy(require_human_approval=False, auto_apply=True)
        components = [f"nf-{i}" for i in range(5)]
        originals = {c: f"original config of {c};\n".encode() for c in components}
        queue = ActionQueue(AuditLog())
        adapter = RecordingAdapter(dict(originals))

        for step in range(500):
            op = rng.randrange(6)
            component = rng.choice(components)
            try:
                if op in (0, 1):
                    queue.submit_action(component, golden_outcome(), loop_ref=f"run-{step}")
                elif op == 2 and queue.actions:
                    action_id = rng.choice(sorted(queue.actions))
                    queue.decide(action_id, approve=rng.random() < 0.75, operator="op")
                elif op == 3 and queue.actions:
                    action_id = rng.choice(sorted(queue.actions))
                    adapter.fail_next_write = rng.random() < 0.15
                    try:
                        before = adapter.read(queue.get(action_id).component_id)
                        applied = queue.apply(action_id, adapter, policy if rng.random() < 0.7 else auto)
                        if applied.state is ActionState.APPLIED:
                            assert adapter.read(applied.component_id) == applied.proposed_config
                        else:
                            assert adapter.read(applied.component_id) == before
                    finally:
                        adapter.fail_next_write = False
                elif op == 4:
                    restored = queue.rollback(component, adapter, policy)
                    assert restored.state is ActionState.ROLLED_BACK
                elif op == 5 and queue.actions:
                    action_id = rng.choice(sorted(queue.actions))
                    queue.decide(action_id, approve=True, operator="op")
                    before = adapter.read(queue.get(action_id).component_id)
                    queue.apply(action_id, adapter, policy)
                    queue.rollback(queue.get(action_id).component_id, adapter, policy)
                    assert adapter.read(queue.get(action_id).component_id) == before
            except (DuplicateInFlight, InvalidTransition, NoSafeSnapshot, UnknownAction):
                pass
            assert verify_audit_chain(queue.audit).intact

        for action in queue.actions.values():
            states = [state for state, _ in action.history]
            assert states[0] is ActionState.PENDING
            for previous, current in zip(states, states[1:]):
                assert current in LEGAL_TRANSITIONS[previous]

        # any injected tamper breaks the chain exactly at the record
        import dataclasses

        for _ in range(10):
            target = rng.randrange(len(queue.audit.records))
            records_backup = list(queue.audit.records)
            record = queue.audit.records[target]
            queue.audit.records[target] = dataclasses.replace(
                record, payload={**record.payload, "tampered": True}
            )
            verdict = verify_audit_chain(queue.audit)
            assert not verdict.intact
            assert verdict.broken_at == target
            queue.audit.records[:] = records_backup
        assert verify_audit_chain(queue.audit).intact


def test_chunk_coverage():
    """Chunks reassemble every corpus document exactly; none exceeds the
    1,000-character default budget."""
    with timed("chunk-coverage", budget=10.0):
        from tests.test_kb import reassemble

        corpus_files = sorted(fixtures.corpus_dir().iterdir())
        assert corpus_files
        for path in corpus_files:
            doc = clean(extract(path.read_text(encoding="utf-8"), path.name))
            chunks = chunk_text(doc, max_chars=1000, overlap_chars=100)
            assert all(len(c.text) <= 1000 for c in chunks), path.name
            assert reassemble(chunks, 100) == doc.content, path.name


def test_similarity_scorer_exact_values():
    with timed("similarity-scorer", budget=5.0):
        assert token_f1("identical words here", "identical words here") == 1.0
        assert token_f1("alpha beta", "gamma delta") == 0.0
        assert token_f1("a b c", "a b d") == 2 / 3
        assert math.isclose(token_f1("a b c", "a b d"), 2 / 3, rel_tol=0, abs_tol=0)
