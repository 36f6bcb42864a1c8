from __future__ import annotations

from pathlib import Path

import pytest

from corpuscraft.documents import (
    CorpusManifest,
    Document,
    FilterVerdict,
    ManifestEntry,
    WhitespaceTokenizer,
    build_manifest,
    estimate_training_flops,
    stream_documents,
    write_documents,
)
from corpuscraft.errors import ConfigError, DataError

from conftest import make_doc, write_corpus


def test_document_round_trip_record() -> None:
    doc = make_doc("d1", "hello world", meta={"origin": "crawl"})
    again = Document.from_record(doc.to_record(), where="mem")
    assert again == doc


def test_document_validation_rejects_empty_id() -> None:
    with pytest.raises(DataError):
        make_doc("", "text").validate()


def test_document_validation_rejects_unknown_language_code() -> None:
    with pytest.raises(DataError):
        make_doc("d", "text", lang="xx").validate()


def test_document_admits_unknown_language_tag() -> None:
    make_doc("d", "text", lang="unknown").validate()


def test_document_validation_rejects_negative_token_count() -> None:
    with pytest.raises(DataError):
        make_doc("d", "text", token_count=-1).validate()


def test_filter_verdict_invariant() -> None:
    assert FilterVerdict(passed=True, reasons=[]).passed
    assert FilterVerdict(passed=False, reasons=["min_word_count"]).reasons
    with pytest.raises(ConfigError):
        FilterVerdict(passed=True, reasons=["min_word_count"])
    with pytest.raises(ConfigError):
        FilterVerdict(passed=False, reasons=[])


def test_stream_documents_preserves_file_order(tmp_path: Path) -> None:
    docs = [make_doc(f"d{i}", f"text {i}") for i in range(3)]
    path = write_corpus(tmp_path / "c.jsonl", docs)
    assert list(stream_documents(path)) == docs


def test_stream_documents_empty_file(tmp_path: Path) -> None:
    path = tmp_path / "empty.jsonl"
    path.write_text("", encoding="utf-8")
    assert list(stream_documents(path)) == []


def test_stream_documents_malformed_line_names_line_number(tmp_path: Path) -> None:
    path = tmp_path / "bad.jsonl"
    path.write_text(
        '{"id": "a", "text": "x", "lang": "en", "source": "web"}\nnot json\n',
        encoding="utf-8",
    )
    with pytest.raises(DataError, match=r"bad\.jsonl:2"):
        list(stream_documents(path))


def test_stream_documents_missing_field_names_line(tmp_path: Path) -> None:
    path = tmp_path / "bad.jsonl"
    path.write_text(
        '{"id": "a", "text": "x", "lang": "en", "source": "web"}\n'
        '{"id": "b", "lang": "en", "source": "web"}\n',
        encoding="utf-8",
    )
    with pytest.raises(DataError, match="2"):
        list(stream_documents(path))


def test_stream_documents_duplicate_id_rejected(tmp_path: Path) -> None:
    path = write_corpus(
        tmp_path / "dup.jsonl", [make_doc("same", "a"), make_doc("same", "b")]
    )
    with pytest.raises(DataError, match="same"):
        list(stream_documents(path))


def test_write_then_stream_round_trip(tmp_path: Path) -> None:
    docs = [
        make_doc("a", "first document", meta={"k": "v"}),
        make_doc("b", "unicode: «серия» 中文", lang="ru", token_count=3),
    ]
    path = tmp_path / "out.jsonl"
    assert write_documents(path, docs) == 2
    assert list(stream_documents(path)) == docs


def test_whitespace_tokenizer_counts_pieces() -> None:
    tok = WhitespaceTokenizer()
    assert len(tok.encode("one two  three")) == 3
    assert tok.encode("") == []
    assert tok.tokenizer_id == WhitespaceTokenizer().tokenizer_id


def test_build_manifest_single_file_totals(tmp_path: Path) -> None:
    docs = [make_doc("a", "one two three four five"), make_doc("b", "a b c d e")]
    path = write_corpus(tmp_path / "en.jsonl", docs)
    manifest = build_manifest([path], WhitespaceTokenizer(), created_at="2026-01-01T00:00:00Z")
    assert len(manifest.entries) == 1
    entry = manifest.entries[0]
    assert (entry.lang, entry.source) == ("en", "web")
    assert entry.document_count == 2
    assert entry.token_count == 10


def test_build_manifest_zero_files() -> None:
    manifest = build_manifest([], WhitespaceTokenizer(), created_at="t")
    assert manifest.entries == []


def test_build_manifest_merges_same_pair_and_is_permutation_invariant(
    tmp_path: Path,
) -> None:
    p1 = write_corpus(tmp_path / "one.jsonl", [make_doc("a", "x y")])
    p2 = write_corpus(tmp_path / "two.jsonl", [make_doc("b", "z w q")])
    forward = build_manifest([p1, p2], WhitespaceTokenizer(), created_at="t")
    backward = build_manifest([p2, p1], WhitespaceTokenizer(), created_at="t")
    assert forward == backward
    assert len(forward.entries) == 1
    entry = forward.entries[0]
    assert entry.document_count == 2
    assert entry.token_count == 5
    assert str(p1.name) in entry.path and str(p2.name) in entry.path


def test_build_manifest_recomputes_token_counts(tmp_path: Path) -> None:
    path = write_corpus(tmp_path / "c.jsonl", [make_doc("a", "x y z", token_count=99)])
    manifest = build_manifest([path], WhitespaceTokenizer(), created_at="t")
    assert manifest.entries[0].token_count == 3


def test_manifest_rejects_duplicate_lang_source_pair() -> None:
    with pytest.raises(DataError):
        CorpusManifest(
            entries=[
                ManifestEntry("en", "web", 1, 5, "a.jsonl"),
                ManifestEntry("en", "web", 2, 9, "b.jsonl"),
            ],
            created_at="t",
            tokenizer_id="ws",
        ).validate()


def test_manifest_lang_tokens_excludes_unknown_by_default() -> None:
    manifest = CorpusManifest(
        entries=[
            ManifestEntry("en", "web", 1, 100, "a.jsonl"),
            ManifestEntry("en", "books", 1, 50, "b.jsonl"),
            ManifestEntry("unknown", "web", 1, 7, "c.jsonl"),
        ],
        created_at="t",
        tokenizer_id="ws",
    )
    assert manifest.lang_tokens() == {"en": 150}
    assert manifest.lang_tokens(include_unknown=True) == {"en": 150, "unknown": 7}
    assert manifest.total_tokens() == 150
    assert manifest.total_tokens(include_unknown=True) == 157


def test_manifest_save_load_round_trip(tmp_path: Path) -> None:
    manifest = CorpusManifest(
        entries=[ManifestEntry("en", "web", 2, 10, "a.jsonl")],
        created_at="2026-01-01T00:00:00Z",
        tokenizer_id="ws",
    )
    path = tmp_path / "manifest.json"
    manifest.save(path)
    assert CorpusManifest.load(path) == manifest


def test_estimate_training_flops_zero_and_linearity() -> None:
    assert estimate_training_flops(0, 123) == 0
    assert estimate_training_flops(5, 7) == 210
    assert estimate_training_flops(2 * 10**12, 10**9) == 2 * estimate_training_flops(
        10**12, 10**9
    )


def test_estimate_training_flops_rejects_bad_inputs() -> None:
    with pytest.raises(ConfigError):
        estimate_training_flops(-1, 5)
    with pytest.raises(ConfigError):
        estimate_training_flops(5, -1)
    with pytest.raises(ConfigError):
        estimate_training_flops(1.5, 5)  # type: ignore[arg-type]
