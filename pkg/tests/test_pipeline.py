from __future__ import annotations

import json
import string
from pathlib import Path

import pytest

from corpuscraft.errors import ConfigError, UsageError

from conftest import make_doc, prose, write_corpus
from corpuscraft.pipeline import (
    STEP_KINDS,
    PipelineRecipe,
    PipelineStep,
    diff_reports,
    run_pipeline,
)


def _recipe(tmp_path: Path, corpus: Path) -> PipelineRecipe:
    return PipelineRecipe(
        steps=[
            PipelineStep(
                name="strip",
                kind="strip-meta",
                input=str(corpus),
                output=str(tmp_path / "stripped.jsonl"),
            ),
            PipelineStep(
                name="quality",
                kind="filter-heuristics",
                input=str(tmp_path / "stripped.jsonl"),
                output=str(tmp_path / "filtered.jsonl"),
                config={"heuristics": {"min_words": 50}},
            ),
        ],
        seed=7,
        report_path=str(tmp_path / "report.json"),
    )


def _corpus(tmp_path: Path) -> Path:
    path = tmp_path / "corpus.jsonl"
    docs = [make_doc(f"pass{i}", prose(60 + i)) for i in range(4)]
    docs.append(make_doc("short0", prose(20)))
    docs.append(make_doc("short1", prose(30)))
    write_corpus(path, docs)
    return path


def test_step_validation() -> None:
    assert STEP_KINDS == (
        "strip-meta",
        "filter-heuristics",
        "ngram-filter",
        "classifier-filter",
    )
    with pytest.raises(ConfigError):
        PipelineStep(name="", kind="strip-meta", input="a", output="b")
    with pytest.raises(ConfigError):
        PipelineStep(name="x", kind="launder", input="a", output="b")
    with pytest.raises(ConfigError):
        PipelineStep(name="x", kind="strip-meta", input="", output="b")
    with pytest.raises(ConfigError):
        PipelineStep(name="x", kind="strip-meta", input="a", output="")
    with pytest.raises(ConfigError):
        PipelineRecipe(
            steps=[
                PipelineStep(name="x", kind="strip-meta", input="a", output="b"),
                PipelineStep(name="x", kind="strip-meta", input="b", output="c"),
            ]
        )


def test_config_digest_depends_only_on_kind_and_config() -> None:
    one = PipelineStep(
        name="a", kind="filter-heuristics", input="i", output="o",
        config={"heuristics": {"min_words": 50}},
    )
    twin = PipelineStep(
        name="b", kind="filter-heuristics", input="i2", output="o2",
        config={"heuristics": {"min_words": 50}},
    )
    changed = PipelineStep(
        name="c", kind="filter-heuristics", input="i", output="o",
        config={"heuristics": {"min_words": 51}},
    )
    assert len(one.config_digest()) == 16
    assert set(one.config_digest()) <= set(string.hexdigits.lower())
    assert one.config_digest() == twin.config_digest()
    assert one.config_digest() != changed.config_digest()


def test_recipe_from_json(tmp_path: Path) -> None:
    path = tmp_path / "recipe.json"
    path.write_text(
        json.dumps(
            {
                "seed": 3,
                "report_path": "report.json",
                "steps": [
                    {
                        "name": "strip",
                        "kind": "strip-meta",
                        "input": "in.jsonl",
                        "output": "out.jsonl",
                    }
                ],
            }
        ),
        encoding="utf-8",
    )
    recipe = PipelineRecipe.from_json(path)
    assert recipe.seed == 3
    assert recipe.report_path == "report.json"
    assert [step.name for step in recipe.steps] == ["strip"]

    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"steps": [{"name": "x"}]}), encoding="utf-8")
    with pytest.raises(ConfigError):
        PipelineRecipe.from_json(bad)


def test_validate_dataflow(tmp_path: Path) -> None:
    corpus = tmp_path / "corpus.jsonl"
    write_corpus(corpus, [make_doc("a", "hello world")])
    chained = PipelineRecipe(
        steps=[
            PipelineStep(
                name="one", kind="strip-meta",
                input=str(corpus), output=str(tmp_path / "mid.jsonl"),
            ),
            PipelineStep(
                name="two", kind="strip-meta",
                input=str(tmp_path / "mid.jsonl"),
                output=str(tmp_path / "end.jsonl"),
            ),
        ]
    )
    chained.validate_dataflow()

    broken = PipelineRecipe(
        steps=[
            PipelineStep(
                name="one", kind="strip-meta",
                input=str(tmp_path / "missing.jsonl"),
                output=str(tmp_path / "out.jsonl"),
            )
        ]
    )
    with pytest.raises(ConfigError, match="missing"):
        broken.validate_dataflow()


def test_run_pipeline_end_to_end(
    tmp_path: Path
) -> None:
    corpus = _corpus(tmp_path)
    recipe = _recipe(tmp_path, corpus)
    report = run_pipeline(recipe)

    assert report["version"] == 1
    assert report["seed"] == 7
    assert [step["name"] for step in report["steps"]] == ["strip", "quality"]
    strip, quality = report["steps"]
    assert strip["docs_in"] == 6
    assert strip["docs_out"] == 6
    assert strip["pass_rate"] == pytest.approx(1.0)
    assert quality["docs_in"] == 6
    assert quality["docs_out"] == 4
    assert quality["pass_rate"] == pytest.approx(4 / 6)
    for step in report["steps"]:
        assert len(step["config_digest"]) == 16
        assert step["wall_clock_s"] >= 0
        assert Path(step["output"]).exists()

    on_disk = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
    assert on_disk == report

    kept_ids = [
        json.loads(line)["id"]
        for line in (tmp_path / "filtered.jsonl").read_text(encoding="utf-8").splitlines()
    ]
    assert kept_ids == ["pass0", "pass1", "pass2", "pass3"]


def test_run_pipeline_failure_still_writes_report(
    tmp_path: Path
) -> None:
    corpus = _corpus(tmp_path)
    recipe = PipelineRecipe(
        steps=[
            PipelineStep(
                name="broken",
                kind="ngram-filter",
                input=str(corpus),
                output=str(tmp_path / "never.jsonl"),
                config={},
            ),
            PipelineStep(
                name="after",
                kind="strip-meta",
                input=str(tmp_path / "never.jsonl"),
                output=str(tmp_path / "after.jsonl"),
            ),
        ],
        report_path=str(tmp_path / "report.json"),
    )
    with pytest.raises(ConfigError, match="broken"):
        run_pipeline(recipe)

    report = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
    assert len(report["steps"]) == 1
    failed = report["steps"][0]
    assert failed["name"] == "broken"
    assert failed["failed"] is True
    assert "model" in failed["error"]
    assert failed["partial_output"] is False
    assert not (tmp_path / "after.jsonl").exists()


def test_two_runs_are_byte_identical(
    tmp_path: Path
) -> None:
    corpus = _corpus(tmp_path)
    left_dir = tmp_path / "left"
    right_dir = tmp_path / "right"
    left_dir.mkdir()
    right_dir.mkdir()
    run_pipeline(_recipe(left_dir, corpus))
    run_pipeline(_recipe(right_dir, corpus))
    assert (left_dir / "filtered.jsonl").read_bytes() == (
        right_dir / "filtered.jsonl"
    ).read_bytes()
    assert (left_dir / "stripped.jsonl").read_bytes() == (
        right_dir / "stripped.jsonl"
    ).read_bytes()


def test_diff_reports(tmp_path: Path) -> None:
    corpus = _corpus(tmp_path)
    recipe = _recipe(tmp_path, corpus)
    first = run_pipeline(recipe)
    second = run_pipeline(recipe)
    assert diff_reports(first, second) == []

    tweaked = json.loads(json.dumps(second))
    tweaked["steps"][1]["docs_out"] = 3
    found = diff_reports(first, tweaked)
    assert found == [{"path": "steps[1].docs_out", "left": 4, "right": 3}]
    assert diff_reports(first, tweaked, tolerances={"docs_out": 1}) == []


def test_diff_reports_rejects_mismatched_shapes() -> None:
    base = {"version": 1, "seed": 0, "steps": [{"name": "a"}]}
    longer = {"version": 1, "seed": 0, "steps": [{"name": "a"}, {"name": "b"}]}
    renamed = {"version": 1, "seed": 0, "steps": [{"name": "z"}]}
    with pytest.raises(UsageError):
        diff_reports(base, longer)
    with pytest.raises(UsageError):
        diff_reports(base, renamed)


def test_diff_reports_flags_header_fields() -> None:
    left = {"version": 1, "seed": 0, "steps": []}
    right = {"version": 1, "seed": 5, "steps": []}
    found = diff_reports(left, right)
    assert found == [{"path": "seed", "left": 0, "right": 5}]
