"""Minimal CoNLL-U treebank reader for word and surface-text extraction.

Only what fertility measurement needs: each sentence's syntactic words
(rows with plain integer ids) and its surface text (the ``# text``
comment when present, otherwise the forms joined with spaces honoring
``SpaceAfter=No``). Multiword-token ranges (``3-4``) and empty nodes
(``5.1``) are recognized and skipped.
"""

from __future__ import annotations

from collections.abc import Iterable, Iterator
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DataError

__all__ = ["TreebankSentence", "parse_conllu", "parse_conllu_lines"]

_N_COLUMNS = 10


@dataclass
class TreebankSentence:
    words: list[str]
    text: str
    lang: str = ""


@dataclass
class _Builder:
    comments_text: str | None = None
    words: list[str] = field(default_factory=list)
    surface_pieces: list[str] = field(default_factory=list)
    mwt_until: int = 0

    def surface(self) -> str:
        if self.comments_text is not None:
            return self.comments_text
        return "".join(self.surface_pieces).rstrip()


def parse_conllu_lines(
    lines: Iterable[str], lang: str = "", where: str = "<memory>"
) -> Iterator[TreebankSentence]:
    builder: _Builder | None = None
    for lineno, line in enumerate(lines, start=1):
        line = line.rstrip("\n")
        if not line.strip():
            if builder is not None and builder.words:
                yield TreebankSentence(
                    words=builder.words, text=builder.surface(), lang=lang
                )
            builder = None
            continue
        if builder is None:
            builder = _Builder()
        if line.startswith("#"):
            comment = line[1:].strip()
            if comment.startswith("text =") or comment.startswith("text="):
                builder.comments_text = comment.split("=", 1)[1].strip()
            continue
        columns = line.split("\t")
        if len(columns) != _N_COLUMNS:
            raise DataError(
                f"{where}:{lineno}: expected {_N_COLUMNS} tab-separated columns, "
                f"found {len(columns)}"
            )
        token_id = columns[0]
        form = columns[1]
        misc = columns[9]
        no_space = "SpaceAfter=No" in misc.split("|")
        if "-" in token_id:
            start, _, end = token_id.partition("-")
            if not (start.isdigit() and end.isdigit()) or int(start) > int(end):
                raise DataError(f"{where}:{lineno}: malformed token range {token_id!r}")
            builder.mwt_until = int(end)
            builder.surface_pieces.append(form if no_space else form + " ")
            continue
        if "." in token_id:
            head, _, tail = token_id.partition(".")
            if not (head.isdigit() and tail.isdigit()):
                raise DataError(f"{where}:{lineno}: malformed empty-node id {token_id!r}")
            continue
        if not token_id.isdigit():
            raise DataError(f"{where}:{lineno}: malformed token id {token_id!r}")
        index = int(token_id)
        builder.words.append(form)
        if index > builder.mwt_until:
            # Words covered by a multiword token are counted but do not
            # appear on the surface; the covering range supplied the form.
            builder.surface_pieces.append(form if no_space else form + " ")
    if builder is not None and builder.words:
        yield TreebankSentence(words=builder.words, text=builder.surface(), lang=lang)


def parse_conllu(path: str | Path, lang: str = "") -> Iterator[TreebankSentence]:
    """Yield sentences from a CoNLL-U file."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"file not found: {path}")
    with open(path, encoding="utf-8") as handle:
        yield from parse_conllu_lines(handle, lang=lang, where=str(path))
