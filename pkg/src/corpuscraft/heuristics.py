"""Rule-based document quality filtering and metadata stripping.

The quality rules are the widely used web-filtering heuristics: word-count
bounds, mean word length, symbol-to-word ratios, bullet and ellipsis line
ratios, alphabetic-word ratio, and a minimum number of stopword hits from a
per-language list. Each rule can be toggled and thresholded independently,
and a failing document reports every failed rule, not just the first.

``strip_metadata`` removes URLs, e-mail addresses, hashtags, ISO-style
timestamps, and (given a prior corpus scan) repeated boilerplate lines. It
is idempotent: stripping a stripped document is a no-op.
"""

from __future__ import annotations

from collections import Counter
from collections.abc import Iterable
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Any

import regex

from .documents import Document, FilterVerdict
from .errors import ConfigError
from .jsonio import read_json

__all__ = [
    "RULES",
    "HeuristicConfig",
    "BoilerplateIndex",
    "apply_heuristics",
    "strip_metadata",
    "scan_boilerplate",
    "load_stopwords",
]

# Rule identifiers, in evaluation order; verdict reasons use these names.
RULES: tuple[str, ...] = (
    "min_word_count",
    "max_word_count",
    "mean_word_length",
    "symbol_word_ratio",
    "bullet_line_ratio",
    "ellipsis_line_ratio",
    "alpha_word_ratio",
    "stopword_count",
)

_BULLET_GLYPHS = ("•", "●", "‣", "·", "-", "*")
_PUNCT_STRIP = ".,;:!?\"'()[]{}«»„“”‘’¡¿%$&@#…-"

_URL_RE = regex.compile(r"(?:https?://|www\.)[^\s<>\"]+", regex.IGNORECASE)
_EMAIL_RE = regex.compile(r"[\w.+-]+@[\w-]+(?:\.[\w-]+)+")
_HASHTAG_RE = regex.compile(r"(?<![\w#&])#\w+")
_TIMESTAMP_RE = regex.compile(
    r"\b\d{4}-\d{2}-\d{2}[T ]\d{2}:\d{2}(?::\d{2}(?:\.\d+)?)?(?:Z|[+-]\d{2}:?\d{2})?"
    r"|\b\d{4}-\d{2}-\d{2}\b"
    r"|\b\d{2}:\d{2}:\d{2}(?:\.\d+)?(?:Z|[+-]\d{2}:?\d{2})?\b"
)
_STRIP_RES = (_URL_RE, _EMAIL_RE, _HASHTAG_RE, _TIMESTAMP_RE)

# A run of removal markers plus surrounding spaces/tabs collapses to a
# single space when flanked by line content on both sides, else to nothing.
_MARKER = "\x00"
_MARKER_RUN_RE = regex.compile(r"[ \t]*(?:\x00[ \t]*)+")


def load_stopwords(lang: str) -> frozenset[str]:
    """Load the bundled stopword list for *lang* (empty set if none)."""
    try:
        text = (resources.files("corpuscraft") / "stopwords" / f"{lang}.txt").read_text(
            "utf-8"
        )
    except (FileNotFoundError, OSError):
        return frozenset()
    return frozenset(word.strip() for word in text.splitlines() if word.strip())


@dataclass
class HeuristicConfig:
    """Thresholds and switches for the quality rules.

    ``unsegmented_langs`` lists languages written without spaces between
    words; for those, word counts fall back to non-whitespace character
    counts, stopword hits are substring counts, and the mean-word-length
    rule is skipped because single characters would always fail it.
    """

    min_words: int = 50
    max_words: int = 100_000
    min_mean_word_length: float = 3.0
    max_mean_word_length: float = 10.0
    max_symbol_word_ratio: float = 0.1
    max_bullet_line_ratio: float = 0.9
    max_ellipsis_line_ratio: float = 0.3
    min_alpha_word_ratio: float = 0.8
    min_stopword_hits: int = 2
    enabled_rules: tuple[str, ...] = RULES
    unsegmented_langs: tuple[str, ...] = ("th", "zh")
    stopword_lists: dict[str, frozenset[str]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if self.min_words < 0 or self.max_words < self.min_words:
            raise ConfigError("word-count bounds must satisfy 0 <= min <= max")
        if self.min_mean_word_length < 0 or (
            self.max_mean_word_length < self.min_mean_word_length
        ):
            raise ConfigError("mean-word-length bounds must satisfy 0 <= min <= max")
        for name in ("max_symbol_word_ratio", "max_bullet_line_ratio",
                     "max_ellipsis_line_ratio", "min_alpha_word_ratio"):
            value = getattr(self, name)
            if not 0.0 <= value or (name != "max_symbol_word_ratio" and value > 1.0):
                raise ConfigError(f"{name} out of range: {value}")
        if self.min_stopword_hits < 0:
            raise ConfigError("min_stopword_hits must be non-negative")
        unknown = set(self.enabled_rules) - set(RULES)
        if unknown:
            raise ConfigError(f"unknown rule ids: {sorted(unknown)}")

    def stopwords(self, lang: str) -> frozenset[str]:
        if lang in self.stopword_lists:
            return self.stopword_lists[lang]
        words = load_stopwords(lang)
        self.stopword_lists[lang] = words
        return words

    @classmethod
    def from_json(cls, path: str) -> "HeuristicConfig":
        raw = read_json(path)
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: heuristic config must be a JSON object")
        return cls.from_dict(raw, where=str(path))

    @classmethod
    def from_dict(cls, raw: dict[str, Any], where: str = "config") -> "HeuristicConfig":
        known = {f for f in cls.__dataclass_fields__ if f != "stopword_lists"}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"{where}: unknown heuristic config keys: {sorted(unknown)}")
        kwargs: dict[str, Any] = {}
        for key, value in raw.items():
            if key in ("enabled_rules", "unsegmented_langs"):
                kwargs[key] = tuple(value)
            else:
                kwargs[key] = value
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(f"{where}: {exc}") from exc

    def with_overrides(self, **kwargs: Any) -> "HeuristicConfig":
        return replace(self, **kwargs)


def _split_words(text: str, segmented: bool) -> list[str]:
    if segmented:
        return text.split()
    return [char for char in text if not char.isspace()]


def _content_lines(text: str) -> list[str]:
    return [line for line in text.split("\n") if line.strip()]


def _count_overlapfree(text: str, needle: str) -> int:
    return text.count(needle)


def apply_heuristics(doc: Document, config: HeuristicConfig) -> FilterVerdict:
    """Evaluate every enabled rule on *doc* independently.

    Returns a passing verdict when no enabled rule fails; otherwise the
    verdict carries the identifiers of all failed rules in evaluation order.
    """
    enabled = set(config.enabled_rules)
    segmented = doc.lang not in config.unsegmented_langs
    words = _split_words(doc.text, segmented)
    num_words = len(words)
    reasons: list[str] = []

    if "min_word_count" in enabled and num_words < config.min_words:
        reasons.append("min_word_count")
    if "max_word_count" in enabled and num_words > config.max_words:
        reasons.append("max_word_count")

    if "mean_word_length" in enabled and segmented and num_words > 0:
        mean_len = sum(len(word) for word in words) / num_words
        if not config.min_mean_word_length <= mean_len <= config.max_mean_word_length:
            reasons.append("mean_word_length")

    if "symbol_word_ratio" in enabled and num_words > 0:
        hash_count = doc.text.count("#")
        ellipsis_count = _count_overlapfree(doc.text, "...") + doc.text.count("…")
        if (hash_count / num_words > config.max_symbol_word_ratio
                or ellipsis_count / num_words > config.max_symbol_word_ratio):
            reasons.append("symbol_word_ratio")

    lines = _content_lines(doc.text)
    if lines:
        if "bullet_line_ratio" in enabled:
            bullets = sum(
                1 for line in lines if line.lstrip().startswith(_BULLET_GLYPHS)
            )
            if bullets / len(lines) > config.max_bullet_line_ratio:
                reasons.append("bullet_line_ratio")
        if "ellipsis_line_ratio" in enabled:
            ellipsis = sum(
                1
                for line in lines
                if line.rstrip().endswith(("...", "…"))
            )
            if ellipsis / len(lines) > config.max_ellipsis_line_ratio:
                reasons.append("ellipsis_line_ratio")

    if "alpha_word_ratio" in enabled and num_words > 0:
        alpha = sum(1 for word in words if any(char.isalpha() for char in word))
        if alpha / num_words < config.min_alpha_word_ratio:
            reasons.append("alpha_word_ratio")

    if "stopword_count" in enabled:
        stopwords = config.stopwords(doc.lang)
        if segmented:
            hits = sum(
                1 for word in words if word.lower().strip(_PUNCT_STRIP) in stopwords
            )
        else:
            hits = sum(doc.text.count(stopword) for stopword in stopwords)
        if hits < config.min_stopword_hits:
            reasons.append("stopword_count")

    return FilterVerdict(passed=not reasons, reasons=reasons)


@dataclass
class BoilerplateIndex:
    """Per-source blacklists of repeated first and last lines."""

    first_lines: dict[str, frozenset[str]] = field(default_factory=dict)
    last_lines: dict[str, frozenset[str]] = field(default_factory=dict)

    def strip(self, doc: Document) -> Document:
        first = self.first_lines.get(doc.source, frozenset())
        last = self.last_lines.get(doc.source, frozenset())
        if not first and not last:
            return doc
        lines = doc.text.split("\n")
        changed = False
        while lines and lines[0].strip() in first and lines[0].strip():
            lines.pop(0)
            changed = True
        while lines and lines[-1].strip() in last and lines[-1].strip():
            lines.pop()
            changed = True
        if not changed:
            return doc
        while lines and not lines[0].strip():
            lines.pop(0)
        while lines and not lines[-1].strip():
            lines.pop()
        return replace(doc, text="\n".join(lines))


def scan_boilerplate(
    docs: Iterable[Document], window: int = 1000, min_repeats: int = 3
) -> BoilerplateIndex:
    """Find lines repeated at document edges within each source.

    Looks at the first and last non-empty line of up to *window* documents
    per source; a line seen at the same edge at least *min_repeats* times is
    blacklisted for that source.
    """
    if window < 1:
        raise ConfigError("boilerplate window must be positive")
    if min_repeats < 2:
        raise ConfigError("boilerplate min_repeats must be at least 2")
    seen: dict[str, int] = {}
    firsts: dict[str, Counter[str]] = {}
    lasts: dict[str, Counter[str]] = {}
    for doc in docs:
        count = seen.get(doc.source, 0)
        if count >= window:
            continue
        seen[doc.source] = count + 1
        lines = [line.strip() for line in doc.text.split("\n") if line.strip()]
        if not lines:
            continue
        firsts.setdefault(doc.source, Counter())[lines[0]] += 1
        lasts.setdefault(doc.source, Counter())[lines[-1]] += 1
    return BoilerplateIndex(
        first_lines={
            source: frozenset(line for line, n in counter.items() if n >= min_repeats)
            for source, counter in firsts.items()
        },
        last_lines={
            source: frozenset(line for line, n in counter.items() if n >= min_repeats)
            for source, counter in lasts.items()
        },
    )


def _strip_patterns_once(text: str) -> str:
    text = text.replace(_MARKER, "")
    for pattern in _STRIP_RES:
        text = pattern.sub(_MARKER, text)

    def collapse(match: "regex.Match[str]") -> str:
        start, end = match.start(), match.end()
        left = text[start - 1] if start > 0 else ""
        right = text[end] if end < len(text) else ""
        if left and left != "\n" and right and right != "\n":
            return " "
        return ""

    return _MARKER_RUN_RE.sub(collapse, text)


def _strip_patterns(text: str) -> str:
    # Removing one span can expose a new match (for example a hashtag that
    # was glued to the previous one), so repeat until a fixed point. Each
    # pass with a match strictly shrinks the text, so this terminates.
    while True:
        stripped = _strip_patterns_once(text)
        if stripped == text:
            return stripped
        text = stripped


def strip_metadata(
    doc: Document, boilerplate: BoilerplateIndex | None = None
) -> Document:
    """Remove inline metadata and known boilerplate from a document.

    Characters outside the removed spans are preserved; the whitespace
    around a removed span collapses so no doubled spaces or dangling
    line-edge spaces remain. Applying the function twice gives the same
    text as applying it once.
    """
    if boilerplate is not None:
        doc = boilerplate.strip(doc)
    stripped = _strip_patterns(doc.text)
    if stripped == doc.text:
        return doc
    return replace(doc, text=stripped)
