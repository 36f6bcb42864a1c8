from __future__ import annotations

import math
import random
from fractions import Fraction
from pathlib import Path

import pytest

from corpuscraft.errors import ConfigError, DataError
from corpuscraft.ngram import (
    BOS,
    EOS,
    UNK,
    CutoffPolicy,
    NgramModel,
    perplexity,
    perplexity_filter,
    tokenize_sentences,
    train_ngram,
)

from conftest import make_doc

# Hand-derived interpolated Kneser-Ney tables for the corpus
# ["a b c", "a b", "b c"] at order 2 with discount 3/4.
#
# Raw bigrams: (<s>,a) x2, (<s>,b) x1, (a,b) x2, (b,c) x2, (b,</s>) x1,
# (c,</s>) x2; six distinct bigram types feed the continuation unigrams.
# The output vocabulary holds a, b, c plus the unknown and end symbols,
# so the uniform base case is 1/5.
TOY_CORPUS = ["a b c", "a b", "b c"]

P_UNI = {
    "a": Fraction(17, 120),
    "b": Fraction(37, 120),
    "c": Fraction(17, 120),
    EOS: Fraction(37, 120),
    UNK: Fraction(12, 120),
}

P_BI = {
    (BOS,): {
        "a": Fraction(39, 80),
        "b": Fraction(19, 80),
        "c": Fraction(17, 240),
        EOS: Fraction(37, 240),
        UNK: Fraction(1, 20),
    },
    ("a",): {
        "a": Fraction(17, 320),
        "b": Fraction(237, 320),
        "c": Fraction(17, 320),
        EOS: Fraction(37, 320),
        UNK: Fraction(3, 80),
    },
    ("b",): {
        "a": Fraction(17, 240),
        "b": Fraction(37, 240),
        "c": Fraction(39, 80),
        EOS: Fraction(19, 80),
        UNK: Fraction(1, 20),
    },
    ("c",): {
        "a": Fraction(17, 320),
        "b": Fraction(37, 320),
        "c": Fraction(17, 320),
        EOS: Fraction(237, 320),
        UNK: Fraction(3, 80),
    },
}

# P("a b") = P(a|<s>) P(b|a) P(</s>|b) = 39/80 * 237/320 * 19/80.
TOY_PP_A_B = (Fraction(2_048_000, 175_617)) ** Fraction(1, 3)


@pytest.fixture(scope="module")
def toy_model() -> NgramModel:
    return train_ngram(TOY_CORPUS, order=2, vocab_size=10, discount=0.75)


def test_tokenize_sentences_splits_and_normalizes() -> None:
    assert tokenize_sentences("Hello, World! Bye.") == [["hello", "world"], ["bye"]]
    assert tokenize_sentences("one\ntwo") == [["one"], ["two"]]
    assert tokenize_sentences("«Вот» так.") == [["вот", "так"]]
    assert tokenize_sentences("   ") == []


def test_toy_unigram_table_matches_hand_derivation(toy_model: NgramModel) -> None:
    dist = toy_model.conditional_distribution(())
    assert set(dist) == set(P_UNI)
    for word, expected in P_UNI.items():
        assert abs(dist[word] - float(expected)) < 1e-12


def test_toy_bigram_tables_match_hand_derivation(toy_model: NgramModel) -> None:
    for context, table in P_BI.items():
        dist = toy_model.conditional_distribution(context)
        assert set(dist) == set(table)
        for word, expected in table.items():
            assert abs(dist[word] - float(expected)) < 1e-12, (context, word)


def test_unseen_context_falls_back_to_unigram(toy_model: NgramModel) -> None:
    dist = toy_model.conditional_distribution(("zzz",))
    for word, expected in P_UNI.items():
        assert abs(dist[word] - float(expected)) < 1e-12


def test_toy_perplexity_closed_form(toy_model: NgramModel) -> None:
    assert abs(perplexity(toy_model, "a b") - float(TOY_PP_A_B)) < 1e-9


def test_sentence_logprob_positions_include_end_symbol(toy_model: NgramModel) -> None:
    logprob, positions = toy_model.sentence_logprob(["a", "b"])
    expected = math.log(39 / 80) + math.log(237 / 320) + math.log(19 / 80)
    assert positions == 3
    assert abs(logprob - expected) < 1e-9


def test_logprob_single_position(toy_model: NgramModel) -> None:
    assert abs(toy_model.logprob((BOS,), "a") - math.log(39 / 80)) < 1e-12


def test_every_conditional_sums_to_one(toy_model: NgramModel) -> None:
    contexts = [(), (BOS,), ("a",), ("b",), ("c",), (UNK,), ("unseen",)]
    for context in contexts:
        total = sum(toy_model.conditional_distribution(context).values())
        assert abs(total - 1.0) < 1e-9, context


def test_higher_order_model_normalizes_over_all_contexts() -> None:
    rng = random.Random(3)
    vocab = [f"w{i}" for i in range(12)]
    corpus = [
        " ".join(rng.choice(vocab) for _ in range(rng.randrange(3, 9)))
        for _ in range(40)
    ]
    model = train_ngram(corpus, order=3, vocab_size=50, discount=0.75)
    symbols = sorted(model.vocab) + [UNK, BOS, "nope"]
    contexts = [()]
    contexts += [(a,) for a in symbols]
    contexts += [(a, b) for a in symbols for b in symbols]
    for context in contexts:
        dist = model.conditional_distribution(context)
        assert abs(sum(dist.values()) - 1.0) < 1e-9, context


def test_unknown_words_get_positive_probability(toy_model: NgramModel) -> None:
    score = perplexity(toy_model, "zzz qqq")
    assert math.isfinite(score)
    assert score > 0


def test_repeated_text_scores_lower_than_unseen_text() -> None:
    corpus = ["the cat sat on the mat"] * 20
    model = train_ngram(corpus, order=3, vocab_size=100, discount=0.75)
    seen = perplexity(model, "the cat sat on the mat")
    unseen = perplexity(model, "quantum flux capacitors hum loudly")
    assert seen < unseen


def test_vocab_size_truncation_maps_rare_words_to_unk() -> None:
    model = train_ngram(["a a b"], order=1, vocab_size=1, discount=0.75)
    assert model.vocab == frozenset({"a"})


def test_reserved_symbols_never_enter_vocabulary() -> None:
    model = train_ngram([f"a {UNK} b {BOS} {EOS}"], order=2, vocab_size=10, discount=0.75)
    assert UNK not in model.vocab
    assert BOS not in model.vocab
    assert EOS not in model.vocab


def test_save_load_round_trip_and_byte_stability(
    toy_model: NgramModel, tmp_path: Path
) -> None:
    first = tmp_path / "model1.json"
    second = tmp_path / "model2.json"
    toy_model.save(first)
    toy_model.save(second)
    assert first.read_bytes() == second.read_bytes()
    loaded = NgramModel.load(first)
    assert loaded.order == toy_model.order
    assert loaded.vocab == toy_model.vocab
    assert abs(
        perplexity(loaded, "a b c") - perplexity(toy_model, "a b c")
    ) < 1e-12
    resaved = tmp_path / "model3.json"
    loaded.save(resaved)
    assert resaved.read_bytes() == first.read_bytes()


def test_train_parameter_validation() -> None:
    with pytest.raises(ConfigError):
        train_ngram(["a"], order=0)
    with pytest.raises(ConfigError):
        train_ngram(["a"], vocab_size=0)
    with pytest.raises(ConfigError):
        train_ngram(["a"], discount=0.0)
    with pytest.raises(ConfigError):
        train_ngram(["a"], discount=1.0)
    with pytest.raises(DataError):
        train_ngram([])
    with pytest.raises(DataError):
        train_ngram(["...", "   "])


def test_perplexity_of_empty_text_is_an_error(toy_model: NgramModel) -> None:
    with pytest.raises(DataError):
        perplexity(toy_model, "")
    with pytest.raises(DataError):
        perplexity(toy_model, "?!")


def test_cutoff_policy_validation() -> None:
    CutoffPolicy(mode="percentile", value=95.0)
    CutoffPolicy(mode="absolute", value=1000.0)
    with pytest.raises(ConfigError):
        CutoffPolicy(mode="median", value=1.0)
    with pytest.raises(ConfigError):
        CutoffPolicy(mode="percentile", value=0.0)
    with pytest.raises(ConfigError):
        CutoffPolicy(mode="percentile", value=101.0)
    with pytest.raises(ConfigError):
        CutoffPolicy(mode="absolute", value=0.0)
    with pytest.raises(ConfigError):
        CutoffPolicy(mode="percentile", value=50.0, calibration_sample_size=0)


def test_absolute_filter_matches_direct_scores(toy_model: NgramModel) -> None:
    docs = [
        make_doc("seen", "a b c"),
        make_doc("alsoseen", "a b"),
        make_doc("weird", "zzz qqq xxx yyy www"),
    ]
    scores = {d.id: perplexity(toy_model, d.text) for d in docs}
    bound = (scores["alsoseen"] + scores["weird"]) / 2
    result = perplexity_filter(
        toy_model, docs, CutoffPolicy(mode="absolute", value=bound)
    )
    assert result.bound == bound
    assert [d.id for d in result.kept] == [
        d.id for d in docs if scores[d.id] <= bound
    ]
    assert [doc_id for doc_id, _ in result.dropped] == [
        d.id for d in docs if scores[d.id] > bound
    ]
    for doc_id, score in result.dropped:
        assert abs(score - scores[doc_id]) < 1e-12


def test_percentile_filter_bound_is_order_statistic(toy_model: NgramModel) -> None:
    docs = [make_doc(f"d{i}", text) for i, text in enumerate(
        ["a b c", "a b", "b c", "a b c", "c c c", "zzz qqq", "b b b", "a a a",
         "c b a", "zzz zzz zzz"]
    )]
    scores = sorted(perplexity(toy_model, d.text) for d in docs)
    policy = CutoffPolicy(mode="percentile", value=50.0, calibration_sample_size=100)
    result = perplexity_filter(toy_model, docs, policy)
    expected_bound = scores[math.ceil(0.5 * len(scores)) - 1]
    assert abs(result.bound - expected_bound) < 1e-12
    assert len(result.kept) + len(result.dropped) == len(docs)
    for doc in result.kept:
        assert perplexity(toy_model, doc.text) <= result.bound
    for _, score in result.dropped:
        assert score > result.bound


def test_filter_drops_unscoreable_documents(toy_model: NgramModel) -> None:
    docs = [make_doc("ok", "a b c"), make_doc("empty", "?!")]
    policy = CutoffPolicy(mode="absolute", value=10_000.0)
    result = perplexity_filter(toy_model, docs, policy)
    assert [d.id for d in result.kept] == ["ok"]
    assert [doc_id for doc_id, _ in result.dropped] == ["empty"]
    assert result.dropped[0][1] == math.inf
