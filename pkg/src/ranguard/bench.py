"""Benchmark harness: configs x retrieval modes x models x repeated runs.

Per-cell accuracy is kept as an exact fraction until rendering; similarity
uses a pluggable scorer (token-level F1 by default); latency comes from
the assess path. Recorded trial fixtures can be replayed into the same
report shape for regression checks.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Mapping, Sequence

from ranguard.agents.core import (
    AgentRuntime,
    AssessmentResult,
    RetrievalMode,
    assess_compliance,
    run_compliance_loop,
)
from ranguard.agents.report import ComplianceReport, ComplianceStatus

MODE_LABELS = {
    RetrievalMode.NO_RAG: "No-RAG",
    RetrievalMode.PLAIN_RAG: "RAG",
    RetrievalMode.AGENTIC_RAG: "Agentic RAG",
}
_LABEL_TO_MODE = {label: mode for mode, label in MODE_LABELS.items()}


class EmptySuite(ValueError):
    pass


class EmptyText(ValueError):
    pass


class FixtureMismatch(Exception):
    pass


@dataclass(frozen=True)
class GroundTruth:
    config_id: str
    expected_status: ComplianceStatus
    expected_violation_paths: frozenset[str]
    reference_report_text: str | None = None

    def __post_init__(self) -> None:
        if self.expected_status is ComplianceStatus.NON_COMPLIANT and not self.expected_violation_paths:
            raise ValueError("non-compliant ground truth needs violation paths")


@dataclass(frozen=True)
class TrialRecord:
    config_id: str
    mode: RetrievalMode
    model_name: str
    run_index: int
    predicted_status: ComplianceStatus | None
    correct: bool
    similarity: float | None
    latency_seconds: float
    errored: bool = False
    error: str = ""


@dataclass(frozen=True)
class CellStats:
    accuracy: Fraction
    mean_similarity: float | None
    mean_latency: float
    trials: int
    errored: int
    invalid: bool


@dataclass
class BenchmarkReport:
    cells: dict[tuple[str, RetrievalMode], CellStats]
    trials: list[TrialRecord]
    metadata: dict = field(default_factory=dict)

    def models(self) -> list[str]:
        seen: list[str] = []
        for model, _ in self.cells:
            if model not in seen:
                seen.append(model)
        return seen

    def to_dict(self) -> dict:
        return {
            "metadata": self.metadata,
            "cells": [
                {
                    "model": model,
                    "method": MODE_LABELS[mode],
                    "accuracy": [stats.accuracy.numerator, stats.accuracy.denominator],
                    "mean_similarity": stats.mean_similarity,
                    "mean_latency_s": stats.mean_latency,
                    "trials": stats.trials,
                    "errored": stats.errored,
                    "invalid": stats.invalid,
                }
                for (model, mode), stats in sorted(
                    self.cells.items(), key=lambda kv: (kv[0][0], MODE_LABELS[kv[0][1]])
                )
            ],
            "trials": [
                {
                    "config_id": t.config_id,
                    "method": MODE_LABELS[t.mode],
                    "model": t.model_name,
                    "run_index": t.run_index,
                    "predicted_status": t.predicted_status.value if t.predicted_status else None,
                    "correct": t.correct,
                    "similarity": t.similarity,
                    "latency_seconds": t.latency_seconds,
                    "errored": t.errored,
                    "error": t.error,
                }
                for t in self.trials
            ],
        }


# -- scoring -----------------------------------------------------------------

_TOKEN = re.compile(r"[a-z0-9]+")


def token_f1(candidate: str, reference: str) -> float:
    """Token-level F1 over lowercased alphanumeric tokens (multiset)."""
    if not candidate.strip() or not reference.strip():
        raise EmptyText("similarity needs two non-empty texts")
    from collections import Counter

    cand = Counter(_TOKEN.findall(candidate.lower()))
    ref = Counter(_TOKEN.findall(reference.lower()))
    overlap = sum((cand & ref).values())
    total = sum(cand.values()) + sum(ref.values())
    if total == 0:
        raise EmptyText("no scoreable tokens")
    value = float(Fraction(2 * overlap, total))
    return min(1.0, max(0.0, value))


Scorer = Callable[[str, str], float]


def similarity(candidate_text: str, reference_text: str, scorer: Scorer = token_f1) -> float:
    value = scorer(candidate_text, reference_text)
    return min(1.0, max(0.0, value))


def score_correct(report: ComplianceReport, truth: GroundTruth, strict: bool = True) -> bool:
    """Strict: status must match and reported violation paths must cover
    the expected ones. Status-only mode compares the verdict alone."""
    if report.status is not truth.expected_status:
        return False
    if strict and truth.expected_status is ComplianceStatus.NON_COMPLIANT:
        return report.violation_paths() >= truth.expected_violation_paths
    return True


# -- running -----------------------------------------------------------------


def _aggregate(
    trials: Sequence[TrialRecord],
    error_budget: float = 0.25,
) -> dict[tuple[str, RetrievalMode], CellStats]:
    cells: dict[tuple[str, RetrievalMode], list[TrialRecord]] = {}
    for trial in trials:
        cells.setdefault((trial.model_name, trial.mode), []).append(trial)
    stats: dict[tuple[str, RetrievalMode], CellStats] = {}
    for key, cell_trials in cells.items():
        valid = [t for t in cell_trials if not t.errored]
        errored = len(cell_trials) - len(valid)
        accuracy = Fraction(sum(1 for t in valid if t.correct), len(valid)) if valid else Fraction(0, 1)
        sims = [t.similarity for t in valid if t.similarity is not None]
        mean_similarity = sum(sims) / len(sims) if sims else None
        mean_latency = sum(t.latency_seconds for t in valid) / len(valid) if valid else 0.0
        stats[key] = CellStats(
            accuracy=accuracy,
            mean_similarity=mean_similarity,
            mean_latency=mean_latency,
            trials=len(cell_trials),
            errored=errored,
            invalid=bool(cell_trials) and errored > error_budget * len(cell_trials),
        )
    return stats


def run_benchmark(
    configs: Sequence[tuple[str, str]],
    truths: Mapping[str, GroundTruth],
    modes: Sequence[RetrievalMode],
    runtimes: Sequence[AgentRuntime],
    runs_per_config: int = 3,
    scorer: Scorer = token_f1,
    strict: bool = True,
    use_loop: bool = False,
    max_iterations: int = 3,
) -> BenchmarkReport:
    """Evaluate every (config, mode, model, run) combination.

    The assess path runs without the reflection loop by default so that
    per-call latency is comparable across modes; pass use_loop=True to
    benchmark full loop runs instead. Provider failures mark the trial as
    errored; a cell with more than 25% errored trials is flagged invalid.
    """
    if not configs:
        raise EmptySuite("no configurations to benchmark")
    for config_id, _ in configs:
        if config_id not in truths:
            raise EmptySuite(f"no ground truth for {config_id!r}")

    from ranguard.common import sha256_hex

    corpus_hash = sha256_hex(
        "\n".join(f"{cid}:{sha256_hex(text)}" for cid, text in configs)
    )
    metadata = {
        "runs_per_config": runs_per_config,
        "strict": strict,
        "corpus_hash": corpus_hash,
        "models": [r.chat.model_name for r in runtimes],
        "embedders": sorted({r.embedder.embedder_id for r in runtimes}),
        "store_sizes": {r.chat.model_name: len(r.store) for r in runtimes},
    }

    trials: list[TrialRecord] = []
    for runtime in runtimes:
        model_name = runtime.chat.model_name
        for mode in modes:
            for config_id, config_text in configs:
                truth = truths[config_id]
                for run_index in range(runs_per_config):
                    try:
                        if use_loop:
                            outcome = run_compliance_loop(
                                runtime, config_text, mode, max_iterations=max_iterations
                            )
                            report = outcome.final_report
                            latency = sum(a.latency_s for a in outcome.assessments)
                        else:
                            result: AssessmentResult = assess_compliance(runtime, mode, config_text)
                            report = result.report
                            latency = result.latency_s
                    except Exception as exc:
                        trials.append(
                            TrialRecord(
                                config_id=config_id,
                                mode=mode,
                                model_name=model_name,
                                run_index=run_index,
                                predicted_status=None,
                                correct=False,
                                similarity=None,
                                latency_seconds=0.0,
                                errored=True,
                                error=f"{type(exc).__name__}: {exc}",
                            )
                        )
                        continue
                    sim = (
                        similarity(report.raw_text, truth.reference_report_text, scorer)
                        if truth.reference_report_text
                        else None
                    )
                    trials.append(
                        TrialRecord(
                            config_id=config_id,
                            mode=mode,
                            model_name=model_name,
                            run_index=run_index,
                            predicted_status=report.status,
                            correct=score_correct(report, truth, strict=strict),
                            similarity=sim,
                            latency_seconds=latency,
                        )
                    )
    return BenchmarkReport(cells=_aggregate(trials), trials=trials, metadata=metadata)


# -- rendering -----------------------------------------------------------------


def _format_cell(metric: str, stats: CellStats | None) -> str:
    if stats is None or stats.invalid:
        return "—"
    if metric == "Accuracy":
        return f"{float(stats.accuracy):.2f}"
    if metric == "Similarity":
        return "—" if stats.mean_similarity is None else f"{stats.mean_similarity:.3f}"
    return f"{stats.mean_latency:.2f}"


def render_table(report: BenchmarkReport) -> str:
    """Text table: metric rows x per-model columns, one sub-row per method."""
    models = report.models()
    modes = [m for m in (RetrievalMode.NO_RAG, RetrievalMode.PLAIN_RAG, RetrievalMode.AGENTIC_RAG) if any(mode is m for _, mode in report.cells)]
    headers = ["Metric", "Method", *models]
    rows: list[list[str]] = []
    any_invalid = False
    for metric in ("Accuracy", "Similarity", "Response Time (s)"):
        for index, mode in enumerate(modes):
            row = [metric if index == 0 else "", MODE_LABELS[mode]]
            for model in models:
                stats = report.cells.get((model, mode))
                if stats is not None and stats.invalid:
                    any_invalid = True
                row.append(_format_cell(metric, stats))
            rows.append(row)
    widths = [max(len(headers[i]), *(len(r[i]) for r in rows)) for i in range(len(headers))]
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)).rstrip(),
        "  ".join("-" * w for w in widths),
    ]
    for row in rows:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
    if any_invalid:
        lines.append("— cell invalid: more than 25% of its trials errored")
    return "\n".join(lines) + "\n"


def accuracy_cells(report: BenchmarkReport) -> dict[tuple[str, str], str]:
    """Rendered 2-decimal accuracy per (model, method label)."""
    return {
        (model, MODE_LABELS[mode]): _format_cell("Accuracy", stats)
        for (model, mode), stats in report.cells.items()
    }


def replay_table_check(fixture_path: Path | str) -> BenchmarkReport:
    """Rebuild a report from recorded per-cell trial outcomes and verify the
    rendered accuracy values match the expectations stored alongside them."""
    data = json.loads(Path(fixture_path).read_text(encoding="utf-8"))
    trials: list[TrialRecord] = []
    expected: dict[tuple[str, str], str] = {}
    for cell in data["cells"]:
        mode = _LABEL_TO_MODE[cell["method"]]
        total = int(cell["total"])
        correct = int(cell["correct"])
        if not 0 <= correct <= total:
            raise FixtureMismatch(f"cell {cell['model']}/{cell['method']}: {correct}/{total}")
        expected[(cell["model"], cell["method"])] = str(cell["expected_accuracy"])
        for run_index in range(total):
            trials.append(
                TrialRecord(
                    config_id=f"recorded-{run_index % 4}",
                    mode=mode,
                    model_name=cell["model"],
                    run_index=run_index,
                    predicted_status=None,
                    correct=run_index < correct,
                    similarity=float(cell["mean_similarity"]),
                    latency_seconds=float(cell["mean_latency_s"]),
                )
            )
    report = BenchmarkReport(
        cells=_aggregate(trials), trials=trials, metadata={"source": str(fixture_path), "recorded": True}
    )
    rendered = accuracy_cells(report)
    for key, want in expected.items():
        got = rendered.get(key)
        if got != want:
            raise FixtureMismatch(f"cell {key}: rendered {got!r}, fixture expects {want!r}")
    return report
