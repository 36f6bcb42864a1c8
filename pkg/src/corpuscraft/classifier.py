"""Learned document-quality scoring on a 0-5 scale.

A deliberately small fastText-style model: hashed lowercased word unigrams
and bigrams index a bucket embedding table, the mean embedding feeds a
linear softmax over the six score classes, and training is plain SGD with
a linearly decaying learning rate. Two independently trained models form
an ensemble; a document is kept when the mean probability of scoring 3 or
higher clears a threshold.
"""

from __future__ import annotations

import json
import struct
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np
import regex

from .documents import Document
from .errors import ConfigError, DataError
from .jsonio import canonical_dumps
from .kernels import hash_features

__all__ = [
    "N_CLASSES",
    "POSITIVE_MIN_SCORE",
    "ClassifierHyperparams",
    "LabeledDocument",
    "TextClassifierModel",
    "ClassifierEnsemble",
    "EnsembleFilterResult",
    "F1Report",
    "extract_words",
    "train_classifier",
    "ensemble_filter",
    "evaluate_f1",
]

N_CLASSES = 6
POSITIVE_MIN_SCORE = 3

_MODEL_MAGIC = b"CCRAFTCLS\n"
_MODEL_VERSION = 1

_WORD_RE = regex.compile(r"[^\W_]+")


def extract_words(text: str) -> list[str]:
    """Lowercased word tokens: runs of letters and digits."""
    return _WORD_RE.findall(text.lower())


@dataclass
class ClassifierHyperparams:
    hash_buckets: int = 1 << 21
    embedding_dim: int = 32
    epochs: int = 5
    learning_rate: float = 0.1
    use_bigrams: bool = True

    def __post_init__(self) -> None:
        if self.hash_buckets < 1:
            raise ConfigError("hash_buckets must be positive")
        if self.embedding_dim < 1:
            raise ConfigError("embedding_dim must be positive")
        if self.epochs < 1:
            raise ConfigError("epochs must be positive")
        if self.learning_rate <= 0.0:
            raise ConfigError("learning_rate must be positive")


@dataclass
class LabeledDocument:
    document: Document
    label: int

    def __post_init__(self) -> None:
        if not isinstance(self.label, int) or not 0 <= self.label < N_CLASSES:
            raise DataError(
                f"document {self.document.id!r}: label must be an int in [0, {N_CLASSES - 1}]"
            )


class TextClassifierModel:
    """One trained member of the quality ensemble."""

    def __init__(
        self,
        hyperparams: ClassifierHyperparams,
        seed: int,
        embeddings: np.ndarray,
        weights: np.ndarray,
        bias: np.ndarray,
    ) -> None:
        self.hyperparams = hyperparams
        self.seed = seed
        expected_emb = (hyperparams.hash_buckets, hyperparams.embedding_dim)
        if embeddings.shape != expected_emb:
            raise ConfigError(
                f"embedding table shape {embeddings.shape} != {expected_emb}"
            )
        if weights.shape != (N_CLASSES, hyperparams.embedding_dim):
            raise ConfigError("output weight shape mismatch")
        if bias.shape != (N_CLASSES,):
            raise ConfigError("bias shape mismatch")
        self.embeddings = embeddings.astype(np.float32, copy=False)
        self.weights = weights.astype(np.float32, copy=False)
        self.bias = bias.astype(np.float32, copy=False)

    def features(self, text: str) -> list[int]:
        return hash_features(
            extract_words(text),
            self.hyperparams.hash_buckets,
            self.hyperparams.use_bigrams,
        )

    def score(self, doc: Union[Document, str]) -> np.ndarray:
        """Probabilities over the six score classes, summing to one."""
        text = doc.text if isinstance(doc, Document) else doc
        ids = self.features(text)
        if ids:
            hidden = self.embeddings[ids].mean(axis=0)
        else:
            hidden = np.zeros(self.hyperparams.embedding_dim, dtype=np.float32)
        logits = self.weights @ hidden + self.bias
        logits = logits - logits.max()
        probs = np.exp(logits, dtype=np.float64)
        return probs / probs.sum()

    def positive_probability(self, doc: Union[Document, str]) -> float:
        """Probability the document scores 3 or higher."""
        return float(self.score(doc)[POSITIVE_MIN_SCORE:].sum())

    def save(self, path: str | Path) -> None:
        header = canonical_dumps(
            {
                "hash_buckets": self.hyperparams.hash_buckets,
                "embedding_dim": self.hyperparams.embedding_dim,
                "epochs": self.hyperparams.epochs,
                "learning_rate": self.hyperparams.learning_rate,
                "use_bigrams": self.hyperparams.use_bigrams,
                "n_classes": N_CLASSES,
                "seed": self.seed,
                "hash": "fnv1a64",
                "bigram_join": " ",
            }
        ).encode("utf-8")
        path = Path(path)
        tmp = path.with_name(path.name + ".tmp")
        with open(tmp, "wb") as handle:
            handle.write(_MODEL_MAGIC)
            handle.write(struct.pack("<II", _MODEL_VERSION, len(header)))
            handle.write(header)
            handle.write(self.embeddings.astype("<f4").tobytes())
            handle.write(self.weights.astype("<f4").tobytes())
            handle.write(self.bias.astype("<f4").tobytes())
        tmp.replace(path)

    @classmethod
    def load(cls, path: str | Path) -> "TextClassifierModel":
        path = Path(path)
        if not path.exists():
            raise DataError(f"file not found: {path}")
        blob = path.read_bytes()
        if not blob.startswith(_MODEL_MAGIC):
            raise DataError(f"{path}: not a classifier model file")
        offset = len(_MODEL_MAGIC)
        try:
            version, header_len = struct.unpack_from("<II", blob, offset)
        except struct.error as exc:
            raise DataError(f"{path}: truncated classifier header") from exc
        if version != _MODEL_VERSION:
            raise DataError(f"{path}: unsupported classifier version {version}")
        offset += 8
        try:
            header = json.loads(blob[offset:offset + header_len].decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise DataError(f"{path}: malformed classifier header") from exc
        offset += header_len
        try:
            hyperparams = ClassifierHyperparams(
                hash_buckets=int(header["hash_buckets"]),
                embedding_dim=int(header["embedding_dim"]),
                epochs=int(header["epochs"]),
                learning_rate=float(header["learning_rate"]),
                use_bigrams=bool(header["use_bigrams"]),
            )
            seed = int(header["seed"])
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{path}: bad classifier header field: {exc}") from exc
        if header.get("n_classes") != N_CLASSES:
            raise DataError(f"{path}: unsupported class count {header.get('n_classes')!r}")
        buckets, dim = hyperparams.hash_buckets, hyperparams.embedding_dim
        need = (buckets * dim + N_CLASSES * dim + N_CLASSES) * 4
        body = blob[offset:]
        if len(body) != need:
            raise DataError(
                f"{path}: expected {need} bytes of parameters, found {len(body)}"
            )
        emb_bytes = buckets * dim * 4
        w_bytes = N_CLASSES * dim * 4
        embeddings = np.frombuffer(body[:emb_bytes], dtype="<f4").reshape(buckets, dim)
        weights = np.frombuffer(
            body[emb_bytes:emb_bytes + w_bytes], dtype="<f4"
        ).reshape(N_CLASSES, dim)
        bias = np.frombuffer(body[emb_bytes + w_bytes:], dtype="<f4")
        return cls(
            hyperparams=hyperparams,
            seed=seed,
            embeddings=embeddings.copy(),
            weights=weights.copy(),
            bias=bias.copy(),
        )


def train_classifier(
    data: Sequence[LabeledDocument],
    hyperparams: ClassifierHyperparams | None = None,
    seed: int = 0,
) -> TextClassifierModel:
    """Train one ensemble member with SGD.

    Deterministic given the data order, the seed, and the hyperparameters:
    initialization comes from a seeded generator and examples are visited
    in their given order every epoch.
    """
    if hyperparams is None:
        hyperparams = ClassifierHyperparams()
    data = list(data)
    if not data:
        raise DataError("training set is empty")
    rng = np.random.default_rng(seed)
    dim = hyperparams.embedding_dim
    bound = 1.0 / dim
    embeddings = rng.uniform(
        -bound, bound, size=(hyperparams.hash_buckets, dim)
    ).astype(np.float32)
    weights = np.zeros((N_CLASSES, dim), dtype=np.float32)
    bias = np.zeros(N_CLASSES, dtype=np.float32)

    model = TextClassifierModel(hyperparams, seed, embeddings, weights, bias)
    feature_cache = [model.features(item.document.text) for item in data]
    total_steps = hyperparams.epochs * len(data)
    step = 0
    for _ in range(hyperparams.epochs):
        for item, ids in zip(data, feature_cache):
            lr = hyperparams.learning_rate * (1.0 - step / total_steps)
            step += 1
            if not ids:
                continue
            hidden = embeddings[ids].mean(axis=0)
            logits = weights @ hidden + bias
            logits = logits - logits.max()
            probs = np.exp(logits)
            probs /= probs.sum()
            grad_logits = probs.astype(np.float32)
            grad_logits[item.label] -= 1.0
            grad_hidden = weights.T @ grad_logits
            weights -= lr * np.outer(grad_logits, hidden)
            bias -= lr * grad_logits
            update = (lr / len(ids)) * grad_hidden
            np.subtract.at(embeddings, ids, update)
    return model


@dataclass
class EnsembleFilterResult:
    kept: list[Document]
    dropped: list[tuple[str, float]]
    scores: dict[str, float] = field(default_factory=dict)


class ClassifierEnsemble:
    """Exactly two members whose positive probabilities are averaged."""

    def __init__(
        self, members: Sequence[TextClassifierModel], keep_threshold: float = 0.5
    ) -> None:
        members = list(members)
        if len(members) != 2:
            raise ConfigError("the quality ensemble takes exactly two members")
        first, second = members
        if (
            first.hyperparams.hash_buckets != second.hyperparams.hash_buckets
            or first.hyperparams.embedding_dim != second.hyperparams.embedding_dim
        ):
            raise ConfigError("ensemble members must share bucket count and dimension")
        if not 0.0 <= keep_threshold <= 1.0:
            raise ConfigError("keep_threshold must lie in [0, 1]")
        self.members = members
        self.keep_threshold = keep_threshold

    def positive_probability(self, doc: Union[Document, str]) -> float:
        return sum(m.positive_probability(doc) for m in self.members) / len(self.members)

    def keeps(self, doc: Union[Document, str]) -> bool:
        return self.positive_probability(doc) >= self.keep_threshold

    def score(self, doc: Union[Document, str]) -> np.ndarray:
        return sum(m.score(doc) for m in self.members) / len(self.members)


def ensemble_filter(
    ensemble: ClassifierEnsemble, docs: Iterable[Document]
) -> EnsembleFilterResult:
    """Split documents by the ensemble keep rule, recording mean scores."""
    result = EnsembleFilterResult(kept=[], dropped=[])
    for doc in docs:
        mean_positive = ensemble.positive_probability(doc)
        result.scores[doc.id] = mean_positive
        if mean_positive >= ensemble.keep_threshold:
            result.kept.append(doc)
        else:
            result.dropped.append((doc.id, mean_positive))
    return result


@dataclass
class F1Report:
    precision: float
    recall: float
    f1: float
    per_class_f1: dict[int, float]
    macro_f1: float
    support: int


def evaluate_f1(
    scorer: Union[TextClassifierModel, ClassifierEnsemble],
    holdout: Sequence[LabeledDocument],
) -> F1Report:
    """Binary and per-class F1 on a held-out labeled set.

    The binary task is "scores 3 or higher": both the labels and the
    argmax predictions are collapsed at that boundary. The holdout must
    contain at least one positive and one negative label.
    """
    holdout = list(holdout)
    if not holdout:
        raise DataError("holdout set is empty")
    labels = [item.label for item in holdout]
    if all(l >= POSITIVE_MIN_SCORE for l in labels) or all(
        l < POSITIVE_MIN_SCORE for l in labels
    ):
        raise DataError("holdout must contain both positive and negative labels")
    preds = [int(np.argmax(scorer.score(item.document))) for item in holdout]

    tp = sum(1 for y, p in zip(labels, preds)
             if y >= POSITIVE_MIN_SCORE and p >= POSITIVE_MIN_SCORE)
    fp = sum(1 for y, p in zip(labels, preds)
             if y < POSITIVE_MIN_SCORE and p >= POSITIVE_MIN_SCORE)
    fn = sum(1 for y, p in zip(labels, preds)
             if y >= POSITIVE_MIN_SCORE and p < POSITIVE_MIN_SCORE)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0

    per_class: dict[int, float] = {}
    for cls in range(N_CLASSES):
        ctp = sum(1 for y, p in zip(labels, preds) if y == cls and p == cls)
        cfp = sum(1 for y, p in zip(labels, preds) if y != cls and p == cls)
        cfn = sum(1 for y, p in zip(labels, preds) if y == cls and p != cls)
        if ctp + cfp + cfn == 0:
            continue
        cp = ctp / (ctp + cfp) if ctp + cfp else 0.0
        cr = ctp / (ctp + cfn) if ctp + cfn else 0.0
        per_class[cls] = 2 * cp * cr / (cp + cr) if cp + cr else 0.0
    macro = sum(per_class.values()) / len(per_class) if per_class else 0.0
    return F1Report(
        precision=precision,
        recall=recall,
        f1=f1,
        per_class_f1=per_class,
        macro_f1=macro,
        support=len(holdout),
    )
