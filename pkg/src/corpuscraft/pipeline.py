"""Composable filtering pipelines with auditable run reports.

A recipe is an ordered list of steps; each step reads a document JSONL
file, applies one transform or filter, and writes its output file. The
runner checks up front that every input exists or is produced by an
earlier step, executes in order, and writes a JSON report with document
counts, pass rates, and a config digest per step. A failing step aborts
the run but still finalizes the report with the failure recorded, so
partial outputs are never mistaken for complete ones.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .classifier import ClassifierEnsemble, TextClassifierModel, ensemble_filter
from .documents import stream_documents, write_documents
from .errors import ConfigError, CorpuscraftError, DataError, UsageError
from .heuristics import HeuristicConfig, apply_heuristics, scan_boilerplate, strip_metadata
from .jsonio import canonical_dumps, read_json, write_json, write_jsonl
from .ngram import CutoffPolicy, NgramModel, perplexity_filter

__all__ = [
    "STEP_KINDS",
    "PipelineStep",
    "PipelineRecipe",
    "run_pipeline",
    "diff_reports",
]

STEP_KINDS = ("strip-meta", "filter-heuristics", "ngram-filter", "classifier-filter")

_REPORT_VERSION = 1


@dataclass
class PipelineStep:
    name: str
    kind: str
    input: str
    output: str
    config: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.name:
            raise ConfigError("pipeline step needs a name")
        if self.kind not in STEP_KINDS:
            raise ConfigError(f"step {self.name!r}: unknown kind {self.kind!r}")
        if not self.input or not self.output:
            raise ConfigError(f"step {self.name!r}: input and output are required")

    def config_digest(self) -> str:
        return hashlib.sha256(
            canonical_dumps({"kind": self.kind, "config": self.config}).encode("utf-8")
        ).hexdigest()[:16]


@dataclass
class PipelineRecipe:
    steps: list[PipelineStep]
    seed: int = 0
    report_path: str = ""

    def __post_init__(self) -> None:
        names = [step.name for step in self.steps]
        if len(set(names)) != len(names):
            raise ConfigError("pipeline step names must be unique")

    @classmethod
    def from_json(cls, path: str | Path) -> "PipelineRecipe":
        raw = read_json(path)
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: recipe must be a JSON object")
        try:
            steps = [
                PipelineStep(
                    name=entry["name"],
                    kind=entry["kind"],
                    input=entry["input"],
                    output=entry["output"],
                    config=entry.get("config", {}),
                )
                for entry in raw.get("steps", [])
            ]
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"{path}: malformed step: {exc}") from exc
        return cls(
            steps=steps,
            seed=int(raw.get("seed", 0)),
            report_path=raw.get("report_path", ""),
        )

    def validate_dataflow(self) -> None:
        """Every input must already exist on disk or be a prior output."""
        produced: set[str] = set()
        for step in self.steps:
            if step.input not in produced and not Path(step.input).exists():
                raise ConfigError(
                    f"step {step.name!r}: input {step.input!r} does not exist and "
                    "no earlier step produces it"
                )
            produced.add(step.output)


def _run_strip_meta(step: PipelineStep) -> tuple[int, int]:
    config = step.config
    window = int(config.get("boilerplate_window", 1000))
    min_repeats = int(config.get("boilerplate_min_repeats", 3))
    scan = bool(config.get("scan_boilerplate", True))
    boilerplate = (
        scan_boilerplate(stream_documents(step.input), window, min_repeats)
        if scan
        else None
    )
    count = 0

    def transformed() -> Any:
        nonlocal count
        for doc in stream_documents(step.input):
            count += 1
            yield strip_metadata(doc, boilerplate)

    written = write_documents(step.output, transformed())
    return count, written


def _run_heuristics(step: PipelineStep) -> tuple[int, int]:
    config = HeuristicConfig.from_dict(
        step.config.get("heuristics", {}), where=f"step {step.name!r}"
    )
    audit_path = step.config.get("audit")
    docs_in = 0
    audits: list[dict[str, Any]] = []

    def kept() -> Any:
        nonlocal docs_in
        for doc in stream_documents(step.input):
            docs_in += 1
            verdict = apply_heuristics(doc, config)
            if verdict.passed:
                yield doc
            elif audit_path:
                audits.append({"id": doc.id, "reasons": verdict.reasons})

    docs_out = write_documents(step.output, kept())
    if audit_path:
        write_jsonl(audit_path, audits)
    return docs_in, docs_out


def _run_ngram_filter(step: PipelineStep) -> tuple[int, int]:
    model_path = step.config.get("model")
    if not model_path:
        raise ConfigError(f"step {step.name!r}: ngram-filter needs a model path")
    model = NgramModel.load(model_path)
    policy = CutoffPolicy(
        mode=step.config.get("mode", "percentile"),
        value=float(step.config.get("value", 95.0)),
        calibration_sample_size=int(step.config.get("calibration_sample_size", 100_000)),
    )
    docs = list(stream_documents(step.input))
    result = perplexity_filter(model, docs, policy)
    write_documents(step.output, result.kept)
    dropped_path = step.config.get("dropped")
    if dropped_path:
        write_jsonl(
            dropped_path,
            ({"id": doc_id, "perplexity": score} for doc_id, score in result.dropped),
        )
    return len(docs), len(result.kept)


def _run_classifier_filter(step: PipelineStep) -> tuple[int, int]:
    model_paths = step.config.get("models")
    if not isinstance(model_paths, list) or len(model_paths) != 2:
        raise ConfigError(
            f"step {step.name!r}: classifier-filter needs exactly two model paths"
        )
    ensemble = ClassifierEnsemble(
        [TextClassifierModel.load(path) for path in model_paths],
        keep_threshold=float(step.config.get("keep_threshold", 0.5)),
    )
    docs = list(stream_documents(step.input))
    result = ensemble_filter(ensemble, docs)
    write_documents(step.output, result.kept)
    dropped_path = step.config.get("dropped")
    if dropped_path:
        write_jsonl(
            dropped_path,
            ({"id": doc_id, "score": score} for doc_id, score in result.dropped),
        )
    return len(docs), len(result.kept)


_RUNNERS = {
    "strip-meta": _run_strip_meta,
    "filter-heuristics": _run_heuristics,
    "ngram-filter": _run_ngram_filter,
    "classifier-filter": _run_classifier_filter,
}


def run_pipeline(recipe: PipelineRecipe, report_path: str | Path | None = None) -> dict[str, Any]:
    """Execute the recipe in order and write the run report.

    Returns the report dictionary. On a step failure the report is still
    written, with the failed step marked and later steps absent, before
    the original error is re-raised with the step name attached.
    """
    recipe.validate_dataflow()
    where = report_path or recipe.report_path
    report: dict[str, Any] = {"version": _REPORT_VERSION, "seed": recipe.seed, "steps": []}

    def finalize() -> None:
        if where:
            write_json(where, report)

    for step in recipe.steps:
        started = time.monotonic()
        try:
            docs_in, docs_out = _RUNNERS[step.kind](step)
        except Exception as exc:
            report["steps"].append(
                {
                    "name": step.name,
                    "kind": step.kind,
                    "failed": True,
                    "error": str(exc),
                    "partial_output": Path(step.output).exists(),
                    "config_digest": step.config_digest(),
                }
            )
            finalize()
            # Keep the error class for exit-code mapping; anything outside
            # the package hierarchy counts as a data problem.
            kind = type(exc) if isinstance(exc, CorpuscraftError) else DataError
            raise kind(f"step {step.name!r}: {exc}") from exc
        report["steps"].append(
            {
                "name": step.name,
                "kind": step.kind,
                "docs_in": docs_in,
                "docs_out": docs_out,
                "pass_rate": docs_out / docs_in if docs_in else 1.0,
                "wall_clock_s": round(time.monotonic() - started, 6),
                "config_digest": step.config_digest(),
                "output": step.output,
            }
        )
    finalize()
    return report


_DIFF_SKIP_FIELDS = ("wall_clock_s",)


def diff_reports(
    left: dict[str, Any],
    right: dict[str, Any],
    tolerances: dict[str, float] | None = None,
) -> list[dict[str, Any]]:
    """Structural comparison of two run reports.

    Timing fields are ignored. *tolerances* maps a field name to an
    absolute tolerance for numeric comparison; everything else must match
    exactly. Reports whose step lists differ in length or names cannot be
    compared and raise a usage error.
    """
    tolerances = tolerances or {}
    left_steps = left.get("steps", [])
    right_steps = right.get("steps", [])
    if len(left_steps) != len(right_steps):
        raise UsageError(
            f"reports have different step counts ({len(left_steps)} vs {len(right_steps)})"
        )
    for a, b in zip(left_steps, right_steps):
        if a.get("name") != b.get("name"):
            raise UsageError(
                f"step name mismatch: {a.get('name')!r} vs {b.get('name')!r}"
            )
    differences: list[dict[str, Any]] = []

    def compare(path: str, a: Any, b: Any, key: str) -> None:
        if key in _DIFF_SKIP_FIELDS:
            return
        if key in tolerances and isinstance(a, (int, float)) and isinstance(b, (int, float)):
            if abs(a - b) <= tolerances[key]:
                return
        elif a == b:
            return
        differences.append({"path": path, "left": a, "right": b})

    for key in ("version", "seed"):
        compare(key, left.get(key), right.get(key), key)
    for index, (a, b) in enumerate(zip(left_steps, right_steps)):
        for key in sorted(set(a) | set(b)):
            compare(f"steps[{index}].{key}", a.get(key), b.get(key), key)
    return differences
