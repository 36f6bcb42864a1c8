from __future__ import annotations

from pathlib import Path

import pytest

from corpuscraft.documents import Document, write_documents

FIXTURES = Path(__file__).parent / "fixtures"


def make_doc(
    doc_id: str,
    text: str,
    lang: str = "en",
    source: str = "web",
    token_count: int | None = None,
    meta: dict[str, str] | None = None,
) -> Document:
    return Document(
        id=doc_id,
        text=text,
        lang=lang,
        source=source,
        token_count=token_count,
        meta=meta or {},
    )


def write_corpus(path: Path, docs: list[Document]) -> Path:
    write_documents(path, docs)
    return path


PROSE_WORDS = [
    "the", "quick", "brown", "fox", "jumps", "over", "that",
    "lazy", "dog", "with", "style", "and", "grace", "runs",
]

NO_STOPWORD_POOL = [
    "zebra", "canyon", "velvet", "orange", "puzzle",
    "garden", "window", "basket", "copper", "meadow",
]


def prose(n_words: int) -> str:
    """English-like filler that passes every default heuristic rule at n >= 50."""
    return " ".join(PROSE_WORDS[i % len(PROSE_WORDS)] for i in range(n_words))


def rule_fixtures() -> dict[str, tuple[str, str, dict]]:
    """One (text, lang, config overrides) per rule, failing exactly that rule."""
    bullets = "\n".join("- " + prose(6) for _ in range(10))
    ellipsis = "\n".join(
        prose(7) + "..." if i < 4 else prose(7) for i in range(10)
    )
    no_stop = " ".join(NO_STOPWORD_POOL[i % 10] for i in range(60))
    return {
        "min_word_count": (prose(49), "en", {}),
        "max_word_count": (prose(101), "en", {"max_words": 100}),
        "mean_word_length": ("to of " * 30, "en", {}),
        "symbol_word_ratio": (prose(60) + " " + "# " * 7, "en", {}),
        "bullet_line_ratio": (bullets, "en", {}),
        "ellipsis_line_ratio": (ellipsis, "en", {}),
        "alpha_word_ratio": (prose(60) + " " + "12345 " * 16, "en", {}),
        "stopword_count": (no_stop, "en", {}),
    }


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def treebank_dir() -> Path:
    return FIXTURES / "treebanks"


@pytest.fixture
def bpe_fixture_dir() -> Path:
    return FIXTURES / "bpe"
