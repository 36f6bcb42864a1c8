"""Deterministic curation toolkit for multilingual pre-training corpora.

Subpackages cover the stages of a corpus pipeline: rule-based quality
filtering, n-gram perplexity filtering, learned quality scoring, language
mixing schedules, tokenizer fertility measurement, long-context sequence
packing, multiple-choice and chat dataset assembly, and a composable
pipeline runner behind a single command-line tool.
"""

from __future__ import annotations

from .documents import (
    LANGUAGES,
    CorpusManifest,
    Document,
    FilterVerdict,
    ManifestEntry,
    estimate_training_flops,
)
from .errors import ConfigError, CorpuscraftError, DataError, UsageError

__version__ = "0.1.0"

__all__ = [
    "LANGUAGES",
    "CorpusManifest",
    "Document",
    "FilterVerdict",
    "ManifestEntry",
    "estimate_training_flops",
    "ConfigError",
    "CorpuscraftError",
    "DataError",
    "UsageError",
    "__version__",
]
