#!/usr/bin/env python3
"""Generate the byte-level BPE parity fixtures.

Trains a small byte-level BPE vocabulary with the `tokenizers` package (the
reference implementation), then encodes 500 multilingual sentences with it
and freezes everything under tests/fixtures/bpe/: vocab.json, merges.txt,
and parity.json holding the sentences plus their reference token ids.

The test suite replays those sentences through this package's own encoder
and requires identical ids, so regenerating fixtures requires the
`tokenizers` package but running the tests does not.
"""

from __future__ import annotations

import json
import random
import sys
import tempfile
from pathlib import Path

try:
    from tokenizers import Tokenizer, models, pre_tokenizers, decoders, trainers
except ImportError:
    sys.exit("the `tokenizers` package is required to regenerate fixtures")

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "bpe"

WORDS = {
    "en": """the quick brown fox jumps over lazy dog time people year way day thing
             world life hand part child eye woman place work week case point government
             company number group problem fact money story""".split(),
    "ru": """время человек год день рука работа слово место вопрос лицо голова страна
             мир дом друг сторона нога дверь взгляд земля машина вода отец женщина""".split(),
    "ar": """الوقت الإنسان السنة اليوم اليد العمل الكلمة المكان السؤال الوجه الرأس
             البلد العالم البيت الصديق الجانب القدم الباب النظرة الأرض""".split(),
    "bg": """време човек година ден ръка работа дума място въпрос лице глава страна
             свят къща приятел страна крак врата поглед земя вода майка""".split(),
    "de": """zeit mensch jahr tag hand arbeit wort ort frage gesicht kopf land welt
             haus freund seite fuß tür blick erde wasser vater frau kind""".split(),
    "es": """tiempo persona año día mano trabajo palabra lugar pregunta cara cabeza
             país mundo casa amigo lado pie puerta mirada tierra agua madre""".split(),
    "fr": """temps personne année jour main travail mot lieu question visage tête
             pays monde maison ami côté pied porte regard terre eau mère père""".split(),
    "it": """tempo persona anno giorno mano lavoro parola luogo domanda faccia testa
             paese mondo casa amico lato piede porta sguardo terra acqua madre""".split(),
    "pl": """czas człowiek rok dzień ręka praca słowo miejsce pytanie twarz głowa
             kraj świat dom przyjaciel strona stopa drzwi spojrzenie ziemia woda""".split(),
    "pt": """tempo pessoa ano dia mão trabalho palavra lugar pergunta rosto cabeça
             país mundo casa amigo lado pé porta olhar terra água mãe pai""".split(),
    "th": """เวลา คน ปี วัน มือ งาน คำ ที่ คำถาม หน้า หัว ประเทศ โลก บ้าน เพื่อน ด้าน
             เท้า ประตู สายตา ดิน น้ำ แม่ พ่อ เด็ก""".split(),
    "zh": """时间 人 年 天 手 工作 词 地方 问题 脸 头 国家 世界 家 朋友 边 脚 门
             目光 土地 水 母亲 父亲 孩子""".split(),
}

EDGE_SENTENCES = [
    "don't can't won't we're I'll they've he'd it's",
    "aaaa aaa aa a aaaaaaa",
    "1234 5,678 9.01 2e10 0x1F 42%",
    "  leading and   internal    spaces  ",
    "tabs\tand\nnewlines\r\nmixed",
    "emoji 🌍 🚀 ✨ mixed with text",
    "MiXeD CaSe WoRdS and ALLCAPS",
    "punctuation!!! ??? ... ;;; :::",
    "«quoted» “curly” 'single' \"double\"",
    "hyphen-ated words co-operate re-enter",
    "müller façade naïve çağdaş björk",
    "математика θεωρία العلوم 数学 คณิตศาสตร์",
    "a",
    " ",
    "...",
    "x" * 80,
    "word " * 30,
    "ab" * 40,
    "серый الгромкий 混合 multilingual строка",
    "end with space ",
]


def build_sentences() -> list[str]:
    rng = random.Random(20240817)
    sentences: list[str] = []
    for lang in sorted(WORDS):
        pool = WORDS[lang]
        for _ in range(40):
            count = rng.randint(4, 12)
            words = [rng.choice(pool) for _ in range(count)]
            if rng.random() < 0.5:
                words[0] = words[0].capitalize()
            tail = rng.choice([".", "!", "?", "", ",", "..."])
            sentences.append(" ".join(words) + tail)
    sentences.extend(EDGE_SENTENCES)
    assert len(sentences) == 500, len(sentences)
    return sentences


def main() -> None:
    sentences = build_sentences()
    tokenizer = Tokenizer(models.BPE())
    tokenizer.pre_tokenizer = pre_tokenizers.ByteLevel(add_prefix_space=False, use_regex=True)
    tokenizer.decoder = decoders.ByteLevel()
    trainer = trainers.BpeTrainer(
        vocab_size=900,
        show_progress=False,
        special_tokens=[],
        initial_alphabet=pre_tokenizers.ByteLevel.alphabet(),
    )
    tokenizer.train_from_iterator(sentences, trainer)

    FIXTURE_DIR.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        vocab_file, merges_file = tokenizer.model.save(tmp)
        (FIXTURE_DIR / "vocab.json").write_bytes(Path(vocab_file).read_bytes())
        (FIXTURE_DIR / "merges.txt").write_bytes(Path(merges_file).read_bytes())

    ids = [tokenizer.encode(sentence).ids for sentence in sentences]
    for sentence, seq in zip(sentences, ids):
        decoded = tokenizer.decode(seq)
        assert decoded == sentence, (sentence, decoded)
    payload = {"sentences": sentences, "ids": ids}
    (FIXTURE_DIR / "parity.json").write_text(
        json.dumps(payload, ensure_ascii=False), encoding="utf-8"
    )
    total = sum(len(seq) for seq in ids)
    print(f"wrote {len(sentences)} sentences, {total} reference tokens")
    print(f"vocab size {tokenizer.get_vocab_size()}")


if __name__ == "__main__":
    main()
