"""Byte-level byte-pair-encoding tokenizer.

Text is mapped byte-for-byte into a printable alphabet, pre-tokenized with
either the classic contraction-aware split pattern or plain whitespace
runs, and each pre-token is merged greedily by rank. Encoding never fails
on any input string and decoding is byte-exact, so
``decode(encode(s)) == s`` for every string ``s``.

Vocabularies load either from a ``vocab.json`` plus ``merges.txt`` pair or
from a single combined-JSON tokenizer file that carries both tables.
"""

from __future__ import annotations

import hashlib
from collections.abc import Sequence
from pathlib import Path

import regex

from .errors import ConfigError, DataError
from .jsonio import read_json
from .kernels import bpe_merge

__all__ = [
    "PRETOKENIZERS",
    "BpeTokenizer",
    "load_bpe",
    "load_combined_json",
    "bytes_to_unicode",
]

# Contraction-aware pre-tokenizer used by byte-level BPE vocabularies.
_SPLIT_PATTERN = (
    r"'s|'t|'re|'ve|'m|'ll|'d"
    r"| ?\p{L}+| ?\p{N}+| ?[^\s\p{L}\p{N}]+|\s+(?!\S)|\s+"
)
_GPT2_RE = regex.compile(_SPLIT_PATTERN)
_WS_RE = regex.compile(r"\s+|[^\s]+")

PRETOKENIZERS = ("split_pattern", "whitespace")

_CACHE_LIMIT = 65536


def bytes_to_unicode() -> dict[int, str]:
    """Map every byte to a printable unicode character, bijectively.

    Printable latin bytes map to themselves; the rest shift to codepoints
    from U+0100 upward. This is the standard byte-level BPE alphabet, so
    vocabularies trained elsewhere load unchanged.
    """
    visible = (
        list(range(ord("!"), ord("~") + 1))
        + list(range(ord("¡"), ord("¬") + 1))
        + list(range(ord("®"), ord("ÿ") + 1))
    )
    chars = list(visible)
    bump = 0
    for byte in range(256):
        if byte not in visible:
            visible.append(byte)
            chars.append(256 + bump)
            bump += 1
    return dict(zip(visible, (chr(c) for c in chars)))


_BYTE_TO_CHAR = bytes_to_unicode()
_CHAR_TO_BYTE = {char: byte for byte, char in _BYTE_TO_CHAR.items()}


class BpeTokenizer:
    """A loaded vocabulary plus ranked merges."""

    def __init__(
        self,
        vocab: dict[str, int],
        merges: Sequence[tuple[str, str]],
        pretokenizer: str = "split_pattern",
    ) -> None:
        if pretokenizer not in PRETOKENIZERS:
            raise ConfigError(f"unknown pretokenizer {pretokenizer!r}")
        if not vocab:
            raise DataError("vocabulary is empty")
        ids = list(vocab.values())
        if len(set(ids)) != len(ids):
            raise DataError("vocabulary ids are not unique")
        ranks: dict[tuple[str, str], int] = {}
        for rank, (left, right) in enumerate(merges):
            if (left, right) in ranks:
                raise DataError(f"duplicate merge pair {left!r} {right!r}")
            for part in (left, right, left + right):
                if part not in vocab:
                    raise DataError(f"merge references token {part!r} missing from vocab")
            ranks[(left, right)] = rank
        self.vocab = dict(vocab)
        self.merges = [tuple(pair) for pair in merges]
        self.ranks = ranks
        self.pretokenizer = pretokenizer
        self._id_to_token = {index: token for token, index in vocab.items()}
        self._splitter = _GPT2_RE if pretokenizer == "split_pattern" else _WS_RE
        self._cache: dict[str, tuple[int, ...]] = {}
        digest = hashlib.sha256()
        for token, index in sorted(vocab.items()):
            digest.update(f"{token}\t{index}\n".encode("utf-8"))
        for left, right in self.merges:
            digest.update(f"{left} {right}\n".encode("utf-8"))
        digest.update(pretokenizer.encode("utf-8"))
        self.tokenizer_id = f"bpe-{digest.hexdigest()[:16]}"

    def _encode_piece(self, piece: str) -> tuple[int, ...]:
        cached = self._cache.get(piece)
        if cached is not None:
            return cached
        symbols = [_BYTE_TO_CHAR[b] for b in piece.encode("utf-8")]
        merged = bpe_merge(symbols, self.ranks)
        try:
            ids = tuple(self.vocab[token] for token in merged)
        except KeyError as exc:
            raise DataError(
                f"token {exc.args[0]!r} produced by merges is missing from vocab; "
                "the vocabulary must contain every single-byte symbol"
            ) from None
        if len(self._cache) >= _CACHE_LIMIT:
            self._cache.clear()
        self._cache[piece] = ids
        return ids

    def encode(self, text: str) -> list[int]:
        out: list[int] = []
        for match in self._splitter.finditer(text):
            out.extend(self._encode_piece(match.group()))
        return out

    def encode_tokens(self, text: str) -> list[str]:
        return [self._id_to_token[i] for i in self.encode(text)]

    def decode(self, ids: Sequence[int]) -> str:
        chars: list[str] = []
        for index in ids:
            token = self._id_to_token.get(index)
            if token is None:
                raise DataError(f"unknown token id {index}")
            chars.append(token)
        try:
            data = bytes(_CHAR_TO_BYTE[char] for char in "".join(chars))
        except KeyError as exc:
            raise DataError(
                f"vocabulary token contains non-alphabet character {exc.args[0]!r}"
            ) from None
        return data.decode("utf-8", errors="replace")

    def __len__(self) -> int:
        return len(self.vocab)


def load_bpe(
    vocab_path: str | Path,
    merges_path: str | Path,
    pretokenizer: str = "split_pattern",
) -> BpeTokenizer:
    """Load a tokenizer from a vocab JSON map and a merges text file.

    The merges file lists one ``left right`` pair per line in rank order;
    lines starting with ``#`` are comments.
    """
    raw_vocab = read_json(vocab_path)
    if not isinstance(raw_vocab, dict):
        raise DataError(f"{vocab_path}: vocab must be a JSON object")
    vocab: dict[str, int] = {}
    for token, index in raw_vocab.items():
        if not isinstance(index, int):
            raise DataError(f"{vocab_path}: id for {token!r} is not an integer")
        vocab[token] = index

    merges_path = Path(merges_path)
    if not merges_path.exists():
        raise DataError(f"file not found: {merges_path}")
    merges: list[tuple[str, str]] = []
    with open(merges_path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split(" ")
            if len(parts) != 2:
                raise DataError(
                    f"{merges_path}:{lineno}: expected two space-separated tokens"
                )
            merges.append((parts[0], parts[1]))
    return BpeTokenizer(vocab=vocab, merges=merges, pretokenizer=pretokenizer)


def load_combined_json(
    path: str | Path, pretokenizer: str = "split_pattern"
) -> BpeTokenizer:
    """Load from a single JSON file with ``model.vocab`` and ``model.merges``.

    Accepts merge entries either as ``"left right"`` strings or as
    two-element arrays.
    """
    raw = read_json(path)
    if not isinstance(raw, dict):
        raise DataError(f"{path}: tokenizer file must be a JSON object")
    model = raw.get("model", raw)
    vocab = model.get("vocab")
    raw_merges = model.get("merges")
    if not isinstance(vocab, dict) or not isinstance(raw_merges, list):
        raise DataError(f"{path}: missing vocab or merges tables")
    merges: list[tuple[str, str]] = []
    for entry in raw_merges:
        if isinstance(entry, str):
            parts = entry.split(" ")
        elif isinstance(entry, (list, tuple)):
            parts = list(entry)
        else:
            parts = []
        if len(parts) != 2:
            raise DataError(f"{path}: malformed merge entry {entry!r}")
        merges.append((parts[0], parts[1]))
    return BpeTokenizer(vocab=vocab, merges=merges, pretokenizer=pretokenizer)
