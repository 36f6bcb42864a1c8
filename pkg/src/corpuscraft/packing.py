"""Long-context sequence packing and positional-encoding coverage checks.

Packing turns a stream of tokenized documents into training sequences of
at most ``max_length`` tokens. A configurable fraction of the output
sequences is marked "full": those are filled to exactly ``max_length``,
splitting documents at the boundary and carrying the overflow into the
next sequence. Unmarked sequences hold one document (or one carried
piece) at its natural length. No token is dropped or invented and
document order is preserved, so packing the same input twice gives
byte-identical output.

The coverage check answers whether a rotary position encoding with a
given base still distinguishes positions across a target context length:
its largest wavelength ``2 * pi * base**((d - 2) / d)`` must be at least
the target length.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError, DataError
from .jsonio import canonical_dumps, iter_jsonl, read_json, write_json

__all__ = [
    "PackingConfig",
    "TokenizedDoc",
    "SequenceSpan",
    "PackedSequence",
    "pack_sequences",
    "select_long_documents",
    "rope_wavelengths",
    "check_context_coverage",
    "CoverageReport",
    "read_tokenized_jsonl",
    "write_packed_jsonl",
    "read_packed_jsonl",
    "write_packed_binary",
    "read_packed_binary",
]


@dataclass
class TokenizedDoc:
    id: str
    tokens: list[int]


@dataclass
class SequenceSpan:
    """Half-open slice of one document occupying part of a sequence."""

    doc_id: str
    start: int
    end: int

    def __post_init__(self) -> None:
        if self.start < 0 or self.end < self.start:
            raise DataError(f"invalid span [{self.start}, {self.end}) for {self.doc_id!r}")


@dataclass
class PackedSequence:
    tokens: list[int]
    spans: list[SequenceSpan]
    at_max: bool


@dataclass
class PackingConfig:
    max_length: int = 16_384
    frac_at_max: float = 0.30
    min_doc_tokens: int = 0
    separator_id: int | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.max_length < 1:
            raise ConfigError("max_length must be positive")
        if not 0.0 <= self.frac_at_max <= 1.0:
            raise ConfigError("frac_at_max must lie in [0, 1]")
        if self.min_doc_tokens < 0:
            raise ConfigError("min_doc_tokens must be non-negative")


def select_long_documents(
    docs: Iterable[TokenizedDoc], min_doc_tokens: int
) -> Iterator[TokenizedDoc]:
    """Pass through documents of at least *min_doc_tokens* tokens."""
    for doc in docs:
        if len(doc.tokens) >= min_doc_tokens:
            yield doc


def _splitmix64(value: int) -> int:
    mask = 0xFFFFFFFFFFFFFFFF
    value = (value + 0x9E3779B97F4A7C15) & mask
    value = ((value ^ (value >> 30)) * 0xBF58476D1CE4E5B9) & mask
    value = ((value ^ (value >> 27)) * 0x94D049BB133111EB) & mask
    return value ^ (value >> 31)


class _MaxMarker:
    """Deterministic mark pattern hitting the target fraction exactly.

    Sequence ``j`` is marked when the running count ``ceil(frac * (j + 1))``
    increments, so after ``N`` sequences exactly ``ceil(frac * N)`` are
    marked (with the default phase). A nonzero seed shifts the pattern's
    phase, which may move the count by at most one.
    """

    def __init__(self, frac: float, seed: int) -> None:
        self.frac = frac
        self.phase = (_splitmix64(seed) % 997) if seed else 0

    def is_max(self, index: int) -> bool:
        if self.frac <= 0.0:
            return False
        j = index + self.phase
        return math.ceil(self.frac * (j + 1)) > math.ceil(self.frac * j)


@dataclass
class _Carry:
    doc_id: str
    tokens: list[int]
    offset: int


def pack_sequences(
    docs: Iterable[TokenizedDoc], config: PackingConfig
) -> list[PackedSequence]:
    """Pack documents into sequences per *config*.

    Marked sequences are filled to exactly ``max_length`` whenever enough
    input remains, counting one optional separator token between adjacent
    documents. Unmarked sequences carry a single document or carried piece
    at natural length, splitting anything longer than ``max_length``.
    """
    sep_width = 0 if config.separator_id is None else 1
    marker = _MaxMarker(config.frac_at_max, config.seed)
    source = iter(select_long_documents(docs, config.min_doc_tokens))
    carry: _Carry | None = None
    out: list[PackedSequence] = []

    def next_piece() -> _Carry | None:
        nonlocal carry
        if carry is not None:
            piece = carry
            carry = None
            return piece
        while True:
            doc = next(source, None)
            if doc is None:
                return None
            if any(not isinstance(token, int) or token < 0 for token in doc.tokens):
                raise DataError(
                    f"document {doc.id!r} has non-integer or negative tokens"
                )
            if doc.tokens:
                return _Carry(doc_id=doc.id, tokens=doc.tokens, offset=0)

    index = 0
    while True:
        piece = next_piece()
        if piece is None:
            break
        tokens: list[int] = []
        spans: list[SequenceSpan] = []
        at_max = marker.is_max(index)

        def append_piece(piece: _Carry, budget: int) -> None:
            nonlocal carry
            available = len(piece.tokens) - piece.offset
            used = min(available, budget)
            start = piece.offset
            tokens.extend(piece.tokens[start:start + used])
            spans.append(SequenceSpan(piece.doc_id, start, start + used))
            if used < available:
                carry = _Carry(piece.doc_id, piece.tokens, start + used)

        if at_max:
            append_piece(piece, config.max_length)
            while len(tokens) < config.max_length and carry is None:
                room = config.max_length - len(tokens)
                if room <= sep_width:
                    # Only separator room is left; close the sequence a
                    # hair short rather than emit a contentless tail.
                    break
                follow = next_piece()
                if follow is None:
                    break
                if sep_width and config.separator_id is not None:
                    tokens.append(config.separator_id)
                append_piece(follow, room - sep_width)
        else:
            append_piece(piece, config.max_length)

        out.append(
            PackedSequence(
                tokens=tokens,
                spans=spans,
                at_max=len(tokens) == config.max_length,
            )
        )
        index += 1
    return out


@dataclass
class CoverageReport:
    covered: bool
    max_wavelength: float
    target_context: int
    base: float
    head_dim: int
    ratio: float

    def to_dict(self) -> dict:
        return {
            "covered": self.covered,
            "max_wavelength": self.max_wavelength,
            "target_context": self.target_context,
            "base": self.base,
            "head_dim": self.head_dim,
            "ratio": self.ratio,
        }


def rope_wavelengths(base: float, head_dim: int) -> list[float]:
    """Wavelength ``2 * pi * base**(2 * i / d)`` for each rotary pair ``i``."""
    if head_dim < 2 or head_dim % 2 != 0:
        raise ConfigError("head_dim must be a positive even number")
    if base <= 1.0:
        raise ConfigError("rotary base must exceed 1")
    return [2.0 * math.pi * base ** (2.0 * i / head_dim) for i in range(head_dim // 2)]


def check_context_coverage(
    base: float, head_dim: int, target_context: int
) -> CoverageReport:
    """Does the slowest rotary frequency span *target_context* positions?"""
    if target_context < 1:
        raise ConfigError("target_context must be positive")
    longest = rope_wavelengths(base, head_dim)[-1]
    return CoverageReport(
        covered=longest >= target_context,
        max_wavelength=longest,
        target_context=target_context,
        base=base,
        head_dim=head_dim,
        ratio=longest / target_context,
    )


def read_tokenized_jsonl(path: str | Path) -> Iterator[TokenizedDoc]:
    """Read ``{"id": ..., "tokens": [...]}`` records."""
    for lineno, record in iter_jsonl(path):
        if not isinstance(record, dict) or "id" not in record or "tokens" not in record:
            raise DataError(f"{path}:{lineno}: expected an object with id and tokens")
        tokens = record["tokens"]
        if not isinstance(tokens, list):
            raise DataError(f"{path}:{lineno}: tokens must be an array")
        yield TokenizedDoc(id=str(record["id"]), tokens=tokens)


def _sequence_record(sequence: PackedSequence) -> dict:
    return {
        "tokens": sequence.tokens,
        "spans": [
            {"doc_id": span.doc_id, "start": span.start, "end": span.end}
            for span in sequence.spans
        ],
        "at_max": sequence.at_max,
    }


def write_packed_jsonl(path: str | Path, sequences: Iterable[PackedSequence]) -> int:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    count = 0
    with open(tmp, "w", encoding="utf-8") as handle:
        for sequence in sequences:
            handle.write(canonical_dumps(_sequence_record(sequence)))
            handle.write("\n")
            count += 1
    tmp.replace(path)
    return count


def read_packed_jsonl(path: str | Path) -> list[PackedSequence]:
    out = []
    for lineno, record in iter_jsonl(path):
        try:
            out.append(
                PackedSequence(
                    tokens=list(record["tokens"]),
                    spans=[
                        SequenceSpan(span["doc_id"], int(span["start"]), int(span["end"]))
                        for span in record["spans"]
                    ],
                    at_max=bool(record["at_max"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{path}:{lineno}: malformed packed sequence: {exc}") from exc
    return out


def write_packed_binary(prefix: str | Path, sequences: Sequence[PackedSequence]) -> None:
    """Write token ids as little-endian uint32 plus a JSON index sidecar.

    ``<prefix>.bin`` holds the concatenated sequences; ``<prefix>.idx.json``
    records per-sequence offsets, lengths, span metadata, and the element
    type, enough to reconstruct every sequence exactly.
    """
    prefix = Path(prefix)
    entries = []
    offset = 0
    with open(prefix.parent / (prefix.name + ".bin"), "wb") as handle:
        for sequence in sequences:
            blob = b"".join(token.to_bytes(4, "little") for token in sequence.tokens)
            handle.write(blob)
            entries.append(
                {
                    "offset": offset,
                    "length": len(sequence.tokens),
                    "at_max": sequence.at_max,
                    "spans": [
                        {"doc_id": span.doc_id, "start": span.start, "end": span.end}
                        for span in sequence.spans
                    ],
                }
            )
            offset += len(sequence.tokens)
    write_json(
        prefix.parent / (prefix.name + ".idx.json"),
        {"dtype": "uint32le", "total_tokens": offset, "sequences": entries},
    )


def read_packed_binary(prefix: str | Path) -> list[PackedSequence]:
    prefix = Path(prefix)
    bin_path = prefix.parent / (prefix.name + ".bin")
    idx_path = prefix.parent / (prefix.name + ".idx.json")
    for needed in (bin_path, idx_path):
        if not needed.exists():
            raise DataError(f"file not found: {needed}")
    index = read_json(idx_path)
    if index.get("dtype") != "uint32le":
        raise DataError(f"{idx_path}: unsupported dtype {index.get('dtype')!r}")
    blob = bin_path.read_bytes()
    if len(blob) != 4 * index.get("total_tokens", -1):
        raise DataError(f"{bin_path}: size does not match index")
    out = []
    for entry in index["sequences"]:
        start = entry["offset"] * 4
        end = start + entry["length"] * 4
        tokens = [
            int.from_bytes(blob[pos:pos + 4], "little") for pos in range(start, end, 4)
        ]
        out.append(
            PackedSequence(
                tokens=tokens,
                spans=[
                    SequenceSpan(span["doc_id"], int(span["start"]), int(span["end"]))
                    for span in entry["spans"]
                ],
                at_max=bool(entry["at_max"]),
            )
        )
    return out
