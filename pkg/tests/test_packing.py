from __future__ import annotations

import math
from collections import Counter
from pathlib import Path

import pytest

from corpuscraft.errors import ConfigError, DataError
from corpuscraft.jsonio import write_jsonl
from corpuscraft.packing import (
    PackedSequence,
    PackingConfig,
    SequenceSpan,
    TokenizedDoc,
    check_context_coverage,
    pack_sequences,
    read_packed_binary,
    read_packed_jsonl,
    read_tokenized_jsonl,
    rope_wavelengths,
    select_long_documents,
    write_packed_binary,
    write_packed_jsonl,
)

mpmath = pytest.importorskip("mpmath")


def _uniform_docs(n: int, length: int) -> list[TokenizedDoc]:
    return [
        TokenizedDoc(f"doc{i:03d}", [i * length + j for j in range(length)])
        for i in range(n)
    ]


def _token_multiset(seqs: list[PackedSequence], separator: int | None = None):
    counts: Counter[int] = Counter()
    for seq in seqs:
        counts.update(seq.tokens)
    if separator is not None:
        del counts[separator]
    return counts


def test_config_validation() -> None:
    PackingConfig()
    with pytest.raises(ConfigError):
        PackingConfig(max_length=0)
    with pytest.raises(ConfigError):
        PackingConfig(frac_at_max=-0.1)
    with pytest.raises(ConfigError):
        PackingConfig(frac_at_max=1.1)
    with pytest.raises(ConfigError):
        PackingConfig(min_doc_tokens=-1)


def test_reference_fixture_pack_counts() -> None:
    docs = _uniform_docs(100, 1000)
    config = PackingConfig(max_length=4000, frac_at_max=0.3, seed=0)
    seqs = pack_sequences(docs, config)
    assert len(seqs) == 52
    at_max = [s for s in seqs if s.at_max]
    assert len(at_max) == math.ceil(0.3 * len(seqs)) == 16
    for seq in at_max:
        assert len(seq.tokens) == 4000
    assert all(len(s.tokens) <= 4000 for s in seqs)
    assert _token_multiset(seqs) == _token_multiset(
        [PackedSequence(d.tokens, [], False) for d in docs]
    )


def test_at_max_flag_matches_length() -> None:
    docs = _uniform_docs(100, 1000)
    seqs = pack_sequences(docs, PackingConfig(max_length=4000, frac_at_max=0.3))
    for seq in seqs:
        assert seq.at_max == (len(seq.tokens) == 4000)


def test_spans_tile_each_sequence_exactly() -> None:
    docs = _uniform_docs(30, 700)
    config = PackingConfig(max_length=2000, frac_at_max=0.5, seed=3)
    for seq in pack_sequences(docs, config):
        covered = 0
        for span in seq.spans:
            assert span.end > span.start
            covered += span.end - span.start
        assert covered == len(seq.tokens)


def test_documents_split_with_carry_across_sequences() -> None:
    docs = _uniform_docs(40, 700)
    seqs = pack_sequences(docs, PackingConfig(max_length=2000, frac_at_max=1.0))
    continued = [
        span for seq in seqs for span in seq.spans if span.start > 0
    ]
    assert continued, "marked fills should split documents across sequences"
    by_doc: dict[str, list[SequenceSpan]] = {}
    for seq in seqs:
        for span in seq.spans:
            by_doc.setdefault(span.doc_id, []).append(span)
    assert set(by_doc) == {d.id for d in docs}
    for doc_id, spans in by_doc.items():
        spans.sort(key=lambda s: s.start)
        assert spans[0].start == 0
        for left, right in zip(spans, spans[1:]):
            assert left.end == right.start
        assert spans[-1].end == 700


def test_seed_shifts_marking_phase_but_preserves_totals() -> None:
    docs = _uniform_docs(100, 1000)
    base = pack_sequences(docs, PackingConfig(max_length=4000, frac_at_max=0.3, seed=0))
    moved = pack_sequences(docs, PackingConfig(max_length=4000, frac_at_max=0.3, seed=9))
    assert _token_multiset(base) == _token_multiset(moved)
    n_base = sum(s.at_max for s in base)
    n_moved = sum(s.at_max for s in moved)
    assert abs(n_moved - math.ceil(0.3 * len(moved))) <= 1
    assert n_base == 16
    assert all(len(s.tokens) <= 4000 for s in moved)


def test_separator_tokens_between_documents() -> None:
    docs = _uniform_docs(20, 900)
    config = PackingConfig(max_length=2000, frac_at_max=1.0, separator_id=10**6)
    seqs = pack_sequences(docs, config)
    assert _token_multiset(seqs, separator=10**6) == Counter(
        t for d in docs for t in d.tokens
    )
    assert any(10**6 in s.tokens for s in seqs)
    for seq in seqs:
        assert seq.tokens[0] != 10**6
        n_sep = seq.tokens.count(10**6)
        assert n_sep == len(seq.spans) - 1
        content = sum(span.end - span.start for span in seq.spans)
        assert content + n_sep == len(seq.tokens)


def test_overlong_document_is_split_at_max_length() -> None:
    docs = [TokenizedDoc("big", list(range(9000)))]
    seqs = pack_sequences(docs, PackingConfig(max_length=4000, frac_at_max=0.0))
    assert [len(s.tokens) for s in seqs] == [4000, 4000, 1000]
    assert _token_multiset(seqs) == Counter(range(9000))


def test_zero_frac_emits_natural_lengths() -> None:
    docs = _uniform_docs(10, 700)
    seqs = pack_sequences(docs, PackingConfig(max_length=4000, frac_at_max=0.0))
    assert [len(s.tokens) for s in seqs] == [700] * 10
    assert not any(s.at_max for s in seqs)


def test_empty_and_zero_token_docs() -> None:
    assert pack_sequences([], PackingConfig()) == []
    seqs = pack_sequences(
        [TokenizedDoc("empty", []), TokenizedDoc("ok", [1, 2, 3])],
        PackingConfig(max_length=10, frac_at_max=0.0),
    )
    assert len(seqs) == 1
    assert seqs[0].tokens == [1, 2, 3]


def test_negative_tokens_rejected() -> None:
    with pytest.raises(DataError):
        pack_sequences(
            [TokenizedDoc("bad", [1, -2])], PackingConfig(max_length=10)
        )


def test_select_long_documents() -> None:
    docs = [TokenizedDoc("a", [1] * 5), TokenizedDoc("b", [1] * 10)]
    assert [d.id for d in select_long_documents(docs, 8)] == ["b"]
    assert [d.id for d in select_long_documents(docs, 0)] == ["a", "b"]


def test_rope_wavelengths_match_arbitrary_precision() -> None:
    mpmath.mp.dps = 50
    for base, head_dim in ((10_000.0, 4), (10_000.0, 128), (500_000.0, 128)):
        got = rope_wavelengths(base, head_dim)
        assert len(got) == head_dim // 2
        for i, value in enumerate(got):
            expected = 2 * mpmath.pi * mpmath.mpf(base) ** (
                mpmath.mpf(2 * i) / head_dim
            )
            assert abs(value - float(expected)) <= float(expected) * 1e-12


def test_context_coverage_against_arbitrary_precision_oracle() -> None:
    mpmath.mp.dps = 50
    cases = [
        (10_000.0, 128, 2_048),
        (10_000.0, 128, 65_536),
        (500_000.0, 128, 16_384),
        (500_000.0, 128, 10**7),
    ]
    for base, head_dim, target in cases:
        report = check_context_coverage(base, head_dim, target)
        oracle_max = 2 * mpmath.pi * mpmath.mpf(base) ** (
            mpmath.mpf(head_dim - 2) / head_dim
        )
        assert report.covered == (oracle_max >= target), (base, head_dim, target)
        assert abs(report.max_wavelength - float(oracle_max)) <= float(
            oracle_max
        ) * 1e-12


def test_rope_parameter_validation() -> None:
    with pytest.raises(ConfigError):
        rope_wavelengths(1.0, 4)
    with pytest.raises(ConfigError):
        rope_wavelengths(10_000.0, 3)
    with pytest.raises(ConfigError):
        rope_wavelengths(10_000.0, 0)
    with pytest.raises(ConfigError):
        check_context_coverage(10_000.0, 128, 0)


def test_packed_jsonl_round_trip(tmp_path: Path) -> None:
    docs = _uniform_docs(12, 500)
    seqs = pack_sequences(docs, PackingConfig(max_length=1600, frac_at_max=0.5))
    path = tmp_path / "packed.jsonl"
    assert write_packed_jsonl(path, seqs) == len(seqs)
    assert read_packed_jsonl(path) == seqs


def test_packed_binary_round_trip(tmp_path: Path) -> None:
    docs = _uniform_docs(12, 500)
    seqs = pack_sequences(docs, PackingConfig(max_length=1600, frac_at_max=0.5))
    prefix = tmp_path / "packed"
    write_packed_binary(prefix, seqs)
    assert (tmp_path / "packed.bin").exists()
    assert (tmp_path / "packed.idx.json").exists()
    assert read_packed_binary(prefix) == seqs


def test_packed_binary_detects_truncation(tmp_path: Path) -> None:
    docs = _uniform_docs(4, 100)
    seqs = pack_sequences(docs, PackingConfig(max_length=400, frac_at_max=0.0))
    prefix = tmp_path / "packed"
    write_packed_binary(prefix, seqs)
    blob = (tmp_path / "packed.bin").read_bytes()
    (tmp_path / "packed.bin").write_bytes(blob[:-4])
    with pytest.raises(DataError):
        read_packed_binary(prefix)


def test_packed_binary_prefix_with_dots(tmp_path: Path) -> None:
    docs = _uniform_docs(2, 50)
    seqs = pack_sequences(docs, PackingConfig(max_length=100, frac_at_max=0.0))
    prefix = tmp_path / "my.packed.v1"
    write_packed_binary(prefix, seqs)
    assert (tmp_path / "my.packed.v1.bin").exists()
    assert read_packed_binary(prefix) == seqs


def test_read_tokenized_jsonl(tmp_path: Path) -> None:
    path = tmp_path / "docs.jsonl"
    write_jsonl(
        path,
        [{"id": "a", "tokens": [1, 2, 3]}, {"id": "b", "tokens": []}],
    )
    docs = list(read_tokenized_jsonl(path))
    assert docs == [TokenizedDoc("a", [1, 2, 3]), TokenizedDoc("b", [])]
    bad = tmp_path / "bad.jsonl"
    write_jsonl(bad, [{"id": "x"}])
    with pytest.raises(DataError):
        list(read_tokenized_jsonl(bad))
