"""Interpolated Kneser-Ney n-gram language model for perplexity filtering.

The model uses a fixed discount per order, raw counts at the top order,
continuation (distinct-predecessor) counts at every lower order, and a
uniform distribution over the output vocabulary as the base case. The
output vocabulary is the trained word list plus the unknown-word and
end-of-sentence symbols, so every conditional distribution sums to one
exactly and unknown words always receive positive probability.

Perplexity is ``exp`` of the mean negative log-probability over all scored
positions, where each sentence contributes one position per word plus one
for the end-of-sentence symbol.
"""

from __future__ import annotations

import math
from collections import Counter
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import regex

from .documents import Document
from .errors import ConfigError, DataError
from .jsonio import canonical_dumps, read_json

__all__ = [
    "BOS",
    "EOS",
    "UNK",
    "NgramModel",
    "CutoffPolicy",
    "PerplexityFilterResult",
    "tokenize_sentences",
    "train_ngram",
    "perplexity",
    "perplexity_filter",
]

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"

_MODEL_MAGIC = "corpuscraft/ngram"
_MODEL_VERSION = 1
_CTX_JOIN = " "

_SENT_SPLIT_RE = regex.compile(r"[.!?\n]+")
_WORD_RE = regex.compile(r"[^\s]+")
_EDGE_PUNCT = ".,;:!?\"'()[]{}«»„“”‘’¡¿…"


def tokenize_sentences(text: str) -> list[list[str]]:
    """Split *text* into sentences of lowercased words.

    Sentences break on ``.!?`` and newlines; words split on whitespace with
    surrounding punctuation trimmed. Empty sentences are dropped.
    """
    sentences = []
    for chunk in _SENT_SPLIT_RE.split(text):
        words = []
        for match in _WORD_RE.finditer(chunk):
            word = match.group().lower().strip(_EDGE_PUNCT)
            if word:
                words.append(word)
        if words:
            sentences.append(words)
    return sentences


@dataclass
class _Level:
    """Count tables for one interpolation level.

    The top level holds raw counts; lower levels hold continuation counts.
    ``totals`` and ``types`` cache the per-context denominator and the
    per-context number of distinct continuations.
    """

    grams: dict[tuple[str, ...], dict[str, int]] = field(default_factory=dict)
    totals: dict[tuple[str, ...], int] = field(default_factory=dict)
    types: dict[tuple[str, ...], int] = field(default_factory=dict)

    def finalize(self) -> None:
        self.totals = {ctx: sum(words.values()) for ctx, words in self.grams.items()}
        self.types = {ctx: len(words) for ctx, words in self.grams.items()}


class NgramModel:
    """A trained interpolated Kneser-Ney model of a fixed order."""

    def __init__(
        self,
        order: int,
        discount: float,
        vocab: frozenset[str],
        raw_counts: list[dict[tuple[str, ...], dict[str, int]]],
    ) -> None:
        if order < 1:
            raise ConfigError("order must be at least 1")
        if not 0.0 < discount < 1.0:
            raise ConfigError("discount must lie strictly between 0 and 1")
        self.order = order
        self.discount = discount
        self.vocab = vocab
        # raw_counts[k] holds raw k-gram counts for k = 1..order
        # (index 0 unused). Kept verbatim for serialization.
        self._raw = raw_counts
        self._levels = self._build_levels()
        # Output vocabulary: trained words plus UNK and EOS.
        self._out_size = len(vocab) + 2

    def _build_levels(self) -> list[_Level]:
        levels: list[_Level] = [None] * (self.order + 1)  # type: ignore[list-item]
        top = _Level(grams={ctx: dict(words) for ctx, words in self._raw[self.order].items()})
        top.finalize()
        levels[self.order] = top
        # Continuation counts at level k come from distinct predecessors in
        # the raw (k+1)-gram table.
        for k in range(self.order - 1, 0, -1):
            preds: dict[tuple[tuple[str, ...], str], set[str]] = {}
            for ctx, words in self._raw[k + 1].items():
                inner = ctx[1:]
                for word in words:
                    preds.setdefault((inner, word), set()).add(ctx[0])
            level = _Level()
            for (inner, word), pset in preds.items():
                level.grams.setdefault(inner, {})[word] = len(pset)
            level.finalize()
            levels[k] = level
        return levels

    def normalize_word(self, word: str) -> str:
        return word if word in self.vocab else UNK

    def logprob(self, context: Sequence[str], word: str) -> float:
        """Natural log of P(word | context), context in left-to-right order."""
        word = self.normalize_word(word) if word != EOS else EOS
        ctx = tuple(self.normalize_word(w) if w not in (BOS, EOS) else w
                    for w in context)[-(self.order - 1):] if self.order > 1 else ()
        return math.log(self._prob(self.order, ctx, word))

    def _prob(self, k: int, ctx: tuple[str, ...], word: str) -> float:
        base = 1.0 / self._out_size
        if k == 0:
            return base
        level = self._levels[k]
        total = level.totals.get(ctx, 0)
        if total == 0:
            # Unseen context: fall through with full weight.
            return self._prob(k - 1, ctx[1:], word) if k > 1 else base
        count = level.grams[ctx].get(word, 0)
        discounted = max(count - self.discount, 0.0) / total
        backoff = self.discount * level.types[ctx] / total
        lower = self._prob(k - 1, ctx[1:], word) if k > 1 else base
        return discounted + backoff * lower

    def sentence_logprob(self, words: Sequence[str]) -> tuple[float, int]:
        """Sum of log P over the sentence positions, including EOS."""
        history = [BOS] * (self.order - 1)
        total = 0.0
        for word in list(words) + [EOS]:
            total += self.logprob(tuple(history), word)
            history.append(word if word == EOS else self.normalize_word(word))
            if self.order > 1:
                history = history[-(self.order - 1):]
        return total, len(words) + 1

    def conditional_distribution(self, context: Sequence[str]) -> dict[str, float]:
        """P(w | context) for every word in the output vocabulary."""
        outcomes = sorted(self.vocab) + [UNK, EOS]
        return {word: math.exp(self.logprob(context, word)) for word in outcomes}

    def save(self, path: str | Path) -> None:
        payload = {
            "magic": _MODEL_MAGIC,
            "version": _MODEL_VERSION,
            "order": self.order,
            "discount": self.discount,
            "vocab": sorted(self.vocab),
            "counts": [
                {
                    _CTX_JOIN.join(ctx): dict(sorted(words.items()))
                    for ctx, words in sorted(self._raw[k].items())
                }
                for k in range(1, self.order + 1)
            ],
        }
        path = Path(path)
        tmp = path.with_name(path.name + ".tmp")
        with open(tmp, "w", encoding="utf-8") as handle:
            handle.write(canonical_dumps(payload))
            handle.write("\n")
        tmp.replace(path)

    @classmethod
    def load(cls, path: str | Path) -> "NgramModel":
        raw = read_json(path)
        if not isinstance(raw, dict) or raw.get("magic") != _MODEL_MAGIC:
            raise DataError(f"{path}: not an n-gram model file")
        if raw.get("version") != _MODEL_VERSION:
            raise DataError(f"{path}: unsupported model version {raw.get('version')!r}")
        try:
            order = int(raw["order"])
            discount = float(raw["discount"])
            vocab = frozenset(raw["vocab"])
            counts: list[dict[tuple[str, ...], dict[str, int]]] = [{}]
            for table in raw["counts"]:
                parsed: dict[tuple[str, ...], dict[str, int]] = {}
                for ctx_str, words in table.items():
                    ctx = tuple(ctx_str.split(_CTX_JOIN)) if ctx_str else ()
                    parsed[ctx] = {word: int(count) for word, count in words.items()}
                counts.append(parsed)
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{path}: malformed n-gram model: {exc}") from exc
        if len(counts) != order + 1:
            raise DataError(f"{path}: expected {order} count tables, found {len(counts) - 1}")
        try:
            return cls(order=order, discount=discount, vocab=vocab, raw_counts=counts)
        except ConfigError as exc:
            raise DataError(f"{path}: {exc}") from exc


def train_ngram(
    docs: Iterable[Document | str],
    order: int = 5,
    vocab_size: int = 500_000,
    discount: float = 0.75,
) -> NgramModel:
    """Train a Kneser-Ney model on the sentences of *docs*.

    Accepts documents or plain strings. The vocabulary keeps the
    *vocab_size* most frequent words (ties broken alphabetically); the rest
    map to the unknown symbol before counting. Training is deterministic
    given the input order.
    """
    if order < 1:
        raise ConfigError("order must be at least 1")
    if vocab_size < 1:
        raise ConfigError("vocab_size must be positive")
    if not 0.0 < discount < 1.0:
        raise ConfigError("discount must lie strictly between 0 and 1")

    sentences: list[list[str]] = []
    freqs: Counter[str] = Counter()
    for doc in docs:
        text = doc.text if isinstance(doc, Document) else doc
        for sentence in tokenize_sentences(text):
            sentences.append(sentence)
            freqs.update(sentence)
    if not sentences:
        raise DataError("training corpus contains no sentences")

    for reserved in (BOS, EOS, UNK):
        freqs.pop(reserved, None)
    kept = sorted(freqs, key=lambda word: (-freqs[word], word))[:vocab_size]
    vocab = frozenset(kept)

    counts: list[dict[tuple[str, ...], dict[str, int]]] = [
        {} for _ in range(order + 1)
    ]
    for sentence in sentences:
        stream = [BOS] * (order - 1) + [
            word if word in vocab else UNK for word in sentence
        ] + [EOS]
        for k in range(1, order + 1):
            table = counts[k]
            for i in range(k - 1, len(stream)):
                word = stream[i]
                if word == BOS:
                    continue
                ctx = tuple(stream[i - k + 1:i])
                bucket = table.setdefault(ctx, {})
                bucket[word] = bucket.get(word, 0) + 1
    return NgramModel(order=order, discount=discount, vocab=vocab, raw_counts=counts)


def perplexity(model: NgramModel, text: str) -> float:
    """Perplexity of *text* under *model*, EOS positions included."""
    sentences = tokenize_sentences(text)
    if not sentences:
        raise DataError("cannot score empty text")
    total = 0.0
    positions = 0
    for sentence in sentences:
        logp, count = model.sentence_logprob(sentence)
        total += logp
        positions += count
    return math.exp(-total / positions)


@dataclass
class CutoffPolicy:
    """How the perplexity bound for filtering is chosen.

    ``absolute`` uses ``value`` directly; ``percentile`` scores the first
    ``calibration_sample_size`` documents and uses their ``value``-th
    percentile as the bound.
    """

    mode: str = "percentile"
    value: float = 95.0
    calibration_sample_size: int = 100_000

    def __post_init__(self) -> None:
        if self.mode not in ("absolute", "percentile"):
            raise ConfigError(f"unknown cutoff mode {self.mode!r}")
        if self.mode == "percentile" and not 0.0 < self.value <= 100.0:
            raise ConfigError("percentile must lie in (0, 100]")
        if self.mode == "absolute" and self.value <= 0.0:
            raise ConfigError("absolute perplexity bound must be positive")
        if self.calibration_sample_size < 1:
            raise ConfigError("calibration_sample_size must be positive")


@dataclass
class PerplexityFilterResult:
    bound: float
    kept: list[Document]
    dropped: list[tuple[str, float]]


def _percentile_bound(scores: Sequence[float], pct: float) -> float:
    ordered = sorted(scores)
    rank = max(1, math.ceil(pct / 100.0 * len(ordered)))
    return ordered[rank - 1]


def perplexity_filter(
    model: NgramModel,
    docs: Iterable[Document],
    policy: CutoffPolicy,
) -> PerplexityFilterResult:
    """Keep documents whose perplexity does not exceed the resolved bound.

    Documents with no scoreable sentences are dropped with an infinite
    score. The result is materialized; corpora are expected to fit in
    memory at this tool's scale.
    """
    docs = list(docs)
    scores: list[float] = []
    for doc in docs:
        try:
            scores.append(perplexity(model, doc.text))
        except DataError:
            scores.append(math.inf)
    if policy.mode == "absolute":
        bound = policy.value
    else:
        calibration = scores[: policy.calibration_sample_size]
        if not calibration:
            raise DataError("no documents available for percentile calibration")
        finite = [score for score in calibration if math.isfinite(score)]
        if not finite:
            raise DataError("all calibration documents were unscoreable")
        bound = _percentile_bound(finite, policy.value)
    kept = []
    dropped = []
    for doc, score in zip(docs, scores):
        if score <= bound:
            kept.append(doc)
        else:
            dropped.append((doc.id, score))
    return PerplexityFilterResult(bound=bound, kept=kept, dropped=dropped)


def iter_scores(model: NgramModel, docs: Iterable[Document]) -> Iterator[tuple[str, float]]:
    """Yield ``(doc_id, perplexity)`` pairs; unscoreable docs give inf."""
    for doc in docs:
        try:
            yield doc.id, perplexity(model, doc.text)
        except DataError:
            yield doc.id, math.inf
