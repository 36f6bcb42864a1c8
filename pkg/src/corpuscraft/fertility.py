"""Tokenizer fertility: subword tokens produced per treebank word.

Fertility for a language is the total number of tokens the tokenizer
emits over every sentence's surface text, divided by the total number of
syntactic words in those sentences. Lower is better; 1.0 would mean one
token per word. The cross-language average is the unweighted mean of the
per-language values so small treebanks count as much as large ones.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path

from .conllu import TreebankSentence, parse_conllu
from .documents import Tokenizer
from .errors import DataError
from .jsonio import write_json

__all__ = ["LangFertility", "FertilityReport", "compute_fertility", "format_table"]


@dataclass
class LangFertility:
    tokens: int
    words: int
    sentences: int

    @property
    def fertility(self) -> float:
        return self.tokens / self.words


@dataclass
class FertilityReport:
    tokenizer_id: str
    per_lang: dict[str, LangFertility]

    def fertility(self, lang: str) -> float:
        if lang not in self.per_lang:
            raise DataError(f"no fertility measured for language {lang!r}")
        return self.per_lang[lang].fertility

    @property
    def average(self) -> float:
        if not self.per_lang:
            raise DataError("report is empty")
        values = [stats.fertility for stats in self.per_lang.values()]
        return sum(values) / len(values)

    def to_dict(self) -> dict:
        return {
            "tokenizer_id": self.tokenizer_id,
            "languages": {
                lang: {
                    "tokens": stats.tokens,
                    "words": stats.words,
                    "sentences": stats.sentences,
                    "fertility": stats.fertility,
                }
                for lang, stats in sorted(self.per_lang.items())
            },
            "average": self.average,
        }

    def save(self, path: str | Path) -> None:
        write_json(path, self.to_dict())


def _measure(
    tokenizer: Tokenizer, sentences: Iterable[TreebankSentence]
) -> LangFertility:
    tokens = 0
    words = 0
    count = 0
    for sentence in sentences:
        if not sentence.words:
            continue
        tokens += len(tokenizer.encode(sentence.text))
        words += len(sentence.words)
        count += 1
    return LangFertility(tokens=tokens, words=words, sentences=count)


def compute_fertility(
    tokenizer: Tokenizer,
    treebanks: Mapping[str, Sequence[str | Path]],
) -> FertilityReport:
    """Measure fertility per language over CoNLL-U files.

    *treebanks* maps a language tag to one or more treebank paths; a
    language with zero words raises a data error rather than dividing by
    zero.
    """
    if not treebanks:
        raise DataError("no treebanks given")
    per_lang: dict[str, LangFertility] = {}
    for lang in sorted(treebanks):
        totals = LangFertility(tokens=0, words=0, sentences=0)
        for path in treebanks[lang]:
            stats = _measure(tokenizer, parse_conllu(path, lang=lang))
            totals.tokens += stats.tokens
            totals.words += stats.words
            totals.sentences += stats.sentences
        if totals.words == 0:
            raise DataError(f"treebanks for {lang!r} contain no words")
        per_lang[lang] = totals
    return FertilityReport(
        tokenizer_id=getattr(tokenizer, "tokenizer_id", "unknown"), per_lang=per_lang
    )


def format_table(reports: Sequence[FertilityReport], langs: Sequence[str] | None = None) -> str:
    """Render reports as an aligned text table, one row per tokenizer."""
    if not reports:
        raise DataError("no reports to format")
    if langs is None:
        langs = sorted({lang for report in reports for lang in report.per_lang})
    headers = ["tokenizer"] + list(langs) + ["avg"]
    rows = [headers]
    for report in reports:
        row = [report.tokenizer_id]
        for lang in langs:
            if lang in report.per_lang:
                row.append(f"{report.per_lang[lang].fertility:.2f}")
            else:
                row.append("-")
        row.append(f"{report.average:.2f}")
        rows.append(row)
    widths = [max(len(row[col]) for row in rows) for col in range(len(headers))]
    lines = []
    for index, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip())
        if index == 0:
            lines.append("  ".join("-" * width for width in widths))
    return "\n".join(lines)
