from __future__ import annotations

import json
import random
from pathlib import Path

import pytest

from corpuscraft.bpe import (
    BpeTokenizer,
    bytes_to_unicode,
    load_bpe,
    load_combined_json,
)
from corpuscraft.errors import DataError


@pytest.fixture(scope="module")
def fixture_tokenizer() -> BpeTokenizer:
    root = Path(__file__).parent / "fixtures" / "bpe"
    return load_bpe(root / "vocab.json", root / "merges.txt")


@pytest.fixture(scope="module")
def parity() -> dict:
    root = Path(__file__).parent / "fixtures" / "bpe"
    return json.loads((root / "parity.json").read_text("utf-8"))


def test_bytes_to_unicode_is_a_bijection_over_all_bytes() -> None:
    table = bytes_to_unicode()
    assert len(table) == 256
    assert len(set(table.values())) == 256
    assert table[ord("A")] == "A"
    assert table[32] == "Ġ"


def test_reference_encodings_reproduced_exactly(
    fixture_tokenizer: BpeTokenizer, parity: dict
) -> None:
    sentences = parity["sentences"]
    reference = parity["ids"]
    assert len(sentences) == len(reference) == 500
    mismatches = sum(
        1
        for text, ids in zip(sentences, reference)
        if fixture_tokenizer.encode(text) != ids
    )
    assert mismatches == 0


def test_reference_decodings_round_trip(
    fixture_tokenizer: BpeTokenizer, parity: dict
) -> None:
    for text, ids in zip(parity["sentences"], parity["ids"]):
        assert fixture_tokenizer.decode(ids) == text


def test_round_trip_on_adversarial_strings(fixture_tokenizer: BpeTokenizer) -> None:
    cases = [
        "",
        " ",
        "  leading and   internal  spaces ",
        "tabs\tand\nnewlines\r\nmixed",
        "emoji 🙂🙃 and ümlauts",
        "ASCII only plain text.",
        "null byte \x00 inside",
        "中文 and русский mixed",
        "'s 't 're contractions don't",
        "numbers 12345 and 3.14",
        "a" * 200,
    ]
    for text in cases:
        ids = fixture_tokenizer.encode(text)
        assert fixture_tokenizer.decode(ids) == text, repr(text)


def test_round_trip_on_random_unicode(fixture_tokenizer: BpeTokenizer) -> None:
    rng = random.Random(99)
    pool = "abc ABC 123 .,!? 🙂 é ü ж 中 \t\n"
    for _ in range(100):
        text = "".join(rng.choice(pool) for _ in range(rng.randrange(0, 40)))
        assert fixture_tokenizer.decode(fixture_tokenizer.encode(text)) == text


def test_whitespace_pretokenizer_round_trips(tmp_path: Path) -> None:
    root = Path(__file__).parent / "fixtures" / "bpe"
    tok = load_bpe(root / "vocab.json", root / "merges.txt", pretokenizer="whitespace")
    for text in ("hello world", "  doubled  spaces  ", "one\ntwo\tthree"):
        assert tok.decode(tok.encode(text)) == text


def test_tokenizer_id_is_stable_and_content_sensitive(tmp_path: Path) -> None:
    root = Path(__file__).parent / "fixtures" / "bpe"
    a = load_bpe(root / "vocab.json", root / "merges.txt")
    b = load_bpe(root / "vocab.json", root / "merges.txt")
    assert a.tokenizer_id == b.tokenizer_id
    assert a.tokenizer_id.startswith("bpe-")

    merges = (root / "merges.txt").read_text("utf-8").splitlines()
    kept = [line for line in merges if line and not line.startswith("#")]
    truncated = tmp_path / "merges.txt"
    truncated.write_text("\n".join(kept[:-5]) + "\n", encoding="utf-8")
    c = load_bpe(root / "vocab.json", truncated)
    assert c.tokenizer_id != a.tokenizer_id


def test_load_bpe_rejects_malformed_merges(tmp_path: Path) -> None:
    vocab = tmp_path / "vocab.json"
    vocab.write_text(json.dumps({"a": 0, "b": 1, "ab": 2}), encoding="utf-8")
    merges = tmp_path / "merges.txt"
    merges.write_text("a b c\n", encoding="utf-8")
    with pytest.raises(DataError, match="1"):
        load_bpe(vocab, merges)


def test_load_bpe_rejects_duplicate_merges(tmp_path: Path) -> None:
    vocab = tmp_path / "vocab.json"
    vocab.write_text(json.dumps({"a": 0, "b": 1, "ab": 2}), encoding="utf-8")
    merges = tmp_path / "merges.txt"
    merges.write_text("a b\na b\n", encoding="utf-8")
    with pytest.raises(DataError):
        load_bpe(vocab, merges)


def test_load_bpe_rejects_merge_outputs_missing_from_vocab(tmp_path: Path) -> None:
    vocab = tmp_path / "vocab.json"
    vocab.write_text(json.dumps({"a": 0, "b": 1}), encoding="utf-8")
    merges = tmp_path / "merges.txt"
    merges.write_text("a b\n", encoding="utf-8")
    with pytest.raises(DataError):
        load_bpe(vocab, merges)


def test_load_bpe_rejects_bad_vocab(tmp_path: Path) -> None:
    merges = tmp_path / "merges.txt"
    merges.write_text("", encoding="utf-8")
    bad_id = tmp_path / "vocab1.json"
    bad_id.write_text(json.dumps({"a": "zero"}), encoding="utf-8")
    with pytest.raises(DataError):
        load_bpe(bad_id, merges)
    dup_id = tmp_path / "vocab2.json"
    dup_id.write_text(json.dumps({"a": 0, "b": 0}), encoding="utf-8")
    with pytest.raises(DataError):
        load_bpe(dup_id, merges)
    empty = tmp_path / "vocab3.json"
    empty.write_text(json.dumps({}), encoding="utf-8")
    with pytest.raises(DataError):
        load_bpe(empty, merges)


def test_load_combined_json_matches_split_files(
    tmp_path: Path, fixture_tokenizer: BpeTokenizer
) -> None:
    root = Path(__file__).parent / "fixtures" / "bpe"
    vocab = json.loads((root / "vocab.json").read_text("utf-8"))
    merges = [
        line
        for line in (root / "merges.txt").read_text("utf-8").splitlines()
        if line and not line.startswith("#")
    ]
    combined = tmp_path / "tokenizer.json"
    combined.write_text(
        json.dumps({"model": {"vocab": vocab, "merges": merges}}), encoding="utf-8"
    )
    tok = load_combined_json(combined)
    for text in ("hello world", "Ärzte 中文", "it's fine."):
        assert tok.encode(text) == fixture_tokenizer.encode(text)
    assert tok.tokenizer_id == fixture_tokenizer.tokenizer_id


def test_decode_rejects_unknown_ids(fixture_tokenizer: BpeTokenizer) -> None:
    with pytest.raises(DataError):
        fixture_tokenizer.decode([10**9])


def test_encode_decode_empty(fixture_tokenizer: BpeTokenizer) -> None:
    assert fixture_tokenizer.encode("") == []
    assert fixture_tokenizer.decode([]) == ""
