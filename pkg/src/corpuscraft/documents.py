"""Core corpus data model: documents, manifests, and training-cost math.

A corpus on disk is a set of JSONL files, one document per line, with the
fields ``id``, ``text``, ``lang``, ``source`` and optionally ``token_count``
and ``meta``. A manifest summarizes one or more of those files per
``(lang, source)`` pair with token counts produced by a configured
tokenizer, never trusted from the input records.
"""

from __future__ import annotations

import datetime as _dt
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Protocol

from .errors import ConfigError, DataError
from .jsonio import iter_jsonl, read_json, write_json, write_jsonl

__all__ = [
    "LANGUAGES",
    "UNKNOWN_LANG",
    "Document",
    "FilterVerdict",
    "ManifestEntry",
    "CorpusManifest",
    "Tokenizer",
    "WhitespaceTokenizer",
    "stream_documents",
    "write_documents",
    "build_manifest",
    "estimate_training_flops",
]

# Language tags covered by the curation recipe, ISO 639-1, sorted.
LANGUAGES: tuple[str, ...] = (
    "ar", "bg", "de", "en", "es", "fr", "it", "pl", "pt", "ru", "th", "zh",
)

# Sentinel tag for documents whose language identification failed.
UNKNOWN_LANG = "unknown"

_MANIFEST_MAGIC = "corpuscraft/manifest"
_MANIFEST_VERSION = 1


class Tokenizer(Protocol):
    """Anything that can turn text into token ids and identify itself."""

    @property
    def tokenizer_id(self) -> str: ...

    def encode(self, text: str) -> list[int]: ...


class WhitespaceTokenizer:
    """Trivial tokenizer for tests and manifests that only need counts.

    Ids are stable hashes of the whitespace-separated pieces, so equal
    pieces always map to equal ids but the vocabulary is unbounded.
    """

    tokenizer_id = "whitespace"

    def encode(self, text: str) -> list[int]:
        from .kernels import fnv1a64

        return [fnv1a64(piece.encode("utf-8")) & 0x7FFFFFFF for piece in text.split()]

    def decode(self, ids: Sequence[int]) -> str:
        raise NotImplementedError("whitespace tokenization is lossy")


@dataclass
class Document:
    """One corpus record."""

    id: str
    text: str
    lang: str
    source: str
    token_count: int | None = None
    meta: dict[str, str] = field(default_factory=dict)

    def validate(self, languages: Sequence[str] = LANGUAGES) -> None:
        if not self.id:
            raise DataError("document id must be non-empty")
        if not isinstance(self.text, str):
            raise DataError(f"document {self.id!r}: text must be a string")
        if self.lang != UNKNOWN_LANG and self.lang not in languages:
            raise DataError(f"document {self.id!r}: unknown lang tag {self.lang!r}")
        if not self.source:
            raise DataError(f"document {self.id!r}: source must be non-empty")
        if self.token_count is not None and (
            not isinstance(self.token_count, int) or self.token_count < 0
        ):
            raise DataError(f"document {self.id!r}: token_count must be a non-negative int")
        if not isinstance(self.meta, dict):
            raise DataError(f"document {self.id!r}: meta must be an object")

    def to_record(self) -> dict[str, Any]:
        record: dict[str, Any] = {
            "id": self.id,
            "text": self.text,
            "lang": self.lang,
            "source": self.source,
        }
        if self.token_count is not None:
            record["token_count"] = self.token_count
        if self.meta:
            record["meta"] = self.meta
        return record

    @classmethod
    def from_record(cls, record: Any, where: str = "") -> "Document":
        prefix = f"{where}: " if where else ""
        if not isinstance(record, dict):
            raise DataError(f"{prefix}document record must be a JSON object")
        missing = [key for key in ("id", "text", "lang", "source") if key not in record]
        if missing:
            raise DataError(f"{prefix}document record missing fields: {', '.join(missing)}")
        doc = cls(
            id=str(record["id"]),
            text=record["text"] if isinstance(record["text"], str) else _bad_text(prefix),
            lang=str(record["lang"]),
            source=str(record["source"]),
            token_count=record.get("token_count"),
            meta=record.get("meta") or {},
        )
        doc.validate()
        return doc


def _bad_text(prefix: str) -> str:
    raise DataError(f"{prefix}text must be a string")


@dataclass
class FilterVerdict:
    """Outcome of running one document through a filter."""

    passed: bool
    reasons: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.passed and self.reasons:
            raise ConfigError("a passing verdict must not carry failure reasons")
        if not self.passed and not self.reasons:
            raise ConfigError("a failing verdict must name the rules that failed")


@dataclass
class ManifestEntry:
    lang: str
    source: str
    document_count: int
    token_count: int
    path: str


@dataclass
class CorpusManifest:
    """Per ``(lang, source)`` roll-up of a tokenized corpus."""

    entries: list[ManifestEntry]
    tokenizer_id: str
    created_at: str = ""

    def __post_init__(self) -> None:
        seen: set[tuple[str, str]] = set()
        for entry in self.entries:
            key = (entry.lang, entry.source)
            if key in seen:
                raise DataError(f"duplicate manifest entry for {key}")
            seen.add(key)

    def lang_tokens(self, include_unknown: bool = False) -> dict[str, int]:
        totals: dict[str, int] = {}
        for entry in self.entries:
            if entry.lang == UNKNOWN_LANG and not include_unknown:
                continue
            totals[entry.lang] = totals.get(entry.lang, 0) + entry.token_count
        return totals

    def total_tokens(self, include_unknown: bool = False) -> int:
        return sum(self.lang_tokens(include_unknown).values())

    def sources_for(self, lang: str) -> list[ManifestEntry]:
        return [entry for entry in self.entries if entry.lang == lang]

    def save(self, path: str | Path) -> None:
        write_json(
            path,
            {
                "magic": _MANIFEST_MAGIC,
                "version": _MANIFEST_VERSION,
                "tokenizer_id": self.tokenizer_id,
                "created_at": self.created_at,
                "entries": [
                    {
                        "lang": entry.lang,
                        "source": entry.source,
                        "document_count": entry.document_count,
                        "token_count": entry.token_count,
                        "path": entry.path,
                    }
                    for entry in self.entries
                ],
            },
        )

    @classmethod
    def load(cls, path: str | Path) -> "CorpusManifest":
        raw = read_json(path)
        if not isinstance(raw, dict) or raw.get("magic") != _MANIFEST_MAGIC:
            raise DataError(f"{path}: not a corpus manifest")
        if raw.get("version") != _MANIFEST_VERSION:
            raise DataError(f"{path}: unsupported manifest version {raw.get('version')!r}")
        try:
            entries = [
                ManifestEntry(
                    lang=item["lang"],
                    source=item["source"],
                    document_count=int(item["document_count"]),
                    token_count=int(item["token_count"]),
                    path=item["path"],
                )
                for item in raw["entries"]
            ]
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{path}: malformed manifest entry: {exc}") from exc
        for entry in entries:
            if entry.document_count < 0 or entry.token_count < 0:
                raise DataError(f"{path}: negative counts in entry {entry.lang}/{entry.source}")
        return cls(
            entries=entries,
            tokenizer_id=raw.get("tokenizer_id", ""),
            created_at=raw.get("created_at", ""),
        )


def stream_documents(
    path: str | Path, languages: Sequence[str] = LANGUAGES
) -> Iterator[Document]:
    """Stream validated documents from a JSONL file.

    Ids must be unique within the file; a repeat raises a data error at the
    offending line.
    """
    seen_ids: set[str] = set()
    for lineno, record in iter_jsonl(path):
        doc = Document.from_record(record, where=f"{path}:{lineno}")
        if doc.lang != UNKNOWN_LANG and doc.lang not in languages:
            raise DataError(f"{path}:{lineno}: unknown lang tag {doc.lang!r}")
        if doc.id in seen_ids:
            raise DataError(f"{path}:{lineno}: duplicate document id {doc.id!r}")
        seen_ids.add(doc.id)
        yield doc


def write_documents(path: str | Path, docs: Iterable[Document]) -> int:
    return write_jsonl(path, (doc.to_record() for doc in docs))


def build_manifest(
    paths: Sequence[str | Path],
    tokenizer: Tokenizer,
    created_at: str | None = None,
) -> CorpusManifest:
    """Tokenize every document under *paths* and roll up per (lang, source).

    Token counts are recomputed with *tokenizer*; any ``token_count`` already
    present on the records is ignored. The result is independent of the order
    in which files are listed: entries are sorted by ``(lang, source)`` and
    files contributing to the same pair are summed, with their paths joined
    by ``;`` in sorted order.
    """
    stats: dict[tuple[str, str], list[Any]] = {}
    for path in paths:
        for doc in stream_documents(path):
            key = (doc.lang, doc.source)
            if key not in stats:
                stats[key] = [0, 0, set()]
            bucket = stats[key]
            bucket[0] += 1
            bucket[1] += len(tokenizer.encode(doc.text))
            bucket[2].add(str(path))
    entries = [
        ManifestEntry(
            lang=lang,
            source=source,
            document_count=bucket[0],
            token_count=bucket[1],
            path=";".join(sorted(bucket[2])),
        )
        for (lang, source), bucket in sorted(stats.items())
    ]
    if created_at is None:
        created_at = _dt.datetime.now(_dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    return CorpusManifest(
        entries=entries, tokenizer_id=tokenizer.tokenizer_id, created_at=created_at
    )


def estimate_training_flops(tokens: int, params: int) -> int:
    """Training cost of a dense decoder pass over *tokens* with *params* weights.

    Uses the standard ``6 * tokens * params`` estimate (forward plus backward)
    in exact integer arithmetic so arbitrarily large budgets do not lose
    precision.
    """
    if not isinstance(tokens, int) or not isinstance(params, int):
        raise ConfigError("tokens and params must be integers")
    if tokens < 0 or params < 0:
        raise ConfigError("tokens and params must be non-negative")
    return 6 * tokens * params
