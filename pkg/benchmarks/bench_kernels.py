"""Compare the compiled kernel extension against the pure-Python fallback.

Times the three hot kernels (FNV-1a hashing, feature-bucket hashing, and
byte-pair merging) plus a full tokenizer encode that exercises them the
way the library does. Run from the repository root:

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --scale 5 --repeats 7 --json
"""

from __future__ import annotations

import argparse
import json
import logging
import random
import string
import sys
import time
from pathlib import Path

from corpuscraft import _fallback

LOGGER = logging.getLogger("bench_kernels")

try:
    from corpuscraft import _speedups
except ImportError:
    _speedups = None


def _random_words(rng: random.Random, count: int) -> list[str]:
    return [
        "".join(rng.choice(string.ascii_lowercase) for _ in range(rng.randrange(2, 12)))
        for _ in range(count)
    ]


def _build_workloads(scale: int) -> dict[str, tuple]:
    rng = random.Random(12345)
    blobs = [
        bytes(rng.randrange(256) for _ in range(rng.randrange(4, 80)))
        for _ in range(2000 * scale)
    ]
    word_lists = [_random_words(rng, rng.randrange(5, 40)) for _ in range(500 * scale)]

    alphabet = [chr(code) for code in range(ord("a"), ord("z") + 1)]
    pairs = [(a, b) for a in alphabet for b in alphabet]
    rng.shuffle(pairs)
    ranks: dict[tuple[str, str], int] = {}
    symbols_pool = []
    for rank, (a, b) in enumerate(pairs[:300]):
        ranks[(a, b)] = rank
    for _ in range(400 * scale):
        symbols_pool.append([rng.choice(alphabet) for _ in range(rng.randrange(3, 30))])
    return {"blobs": (blobs,), "words": (word_lists,), "symbols": (symbols_pool, ranks)}


def _bench_fnv(impl, blobs: list[bytes]) -> int:
    total = 0
    for blob in blobs:
        total ^= impl.fnv1a64(blob)
    return total


def _bench_features(impl, word_lists: list[list[str]]) -> int:
    total = 0
    for words in word_lists:
        total += len(impl.hash_features(words, 1 << 20, True))
    return total


def _bench_merge(impl, symbols_pool: list[list[str]], ranks) -> int:
    total = 0
    for symbols in symbols_pool:
        total += len(impl.bpe_merge(list(symbols), ranks))
    return total


def _bench_encode(impl, sentences: list[str], tokenizer) -> int:
    # The tokenizer binds the merge kernel at import, so swap it there,
    # and drop the per-piece cache so every run does the full work.
    import corpuscraft.bpe as bpe_module

    saved = bpe_module.bpe_merge
    bpe_module.bpe_merge = impl.bpe_merge
    tokenizer._cache.clear()
    try:
        total = 0
        for sentence in sentences:
            total += len(tokenizer.encode(sentence))
        return total
    finally:
        bpe_module.bpe_merge = saved


def _time(fn, *args, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def run(scale: int, repeats: int) -> list[dict]:
    workloads = _build_workloads(scale)
    cases = [
        ("fnv1a64", _bench_fnv, workloads["blobs"]),
        ("hash_features", _bench_features, workloads["words"]),
        ("bpe_merge", _bench_merge, workloads["symbols"]),
    ]

    fixture = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "bpe"
    if fixture.exists():
        from corpuscraft.bpe import load_bpe

        tokenizer = load_bpe(fixture / "vocab.json", fixture / "merges.txt")
        parity = json.loads((fixture / "parity.json").read_text(encoding="utf-8"))
        sentences = parity["sentences"] * scale
        cases.append(("tokenizer_encode", _bench_encode, (sentences, tokenizer)))
    else:
        LOGGER.warning("BPE fixture not found, skipping the end-to-end encode case")

    rows = []
    for name, fn, args in cases:
        python_s = _time(fn, _fallback, *args, repeats=repeats)
        row = {"kernel": name, "python_s": round(python_s, 6)}
        if _speedups is not None:
            compiled_s = _time(fn, _speedups, *args, repeats=repeats)
            row["compiled_s"] = round(compiled_s, 6)
            row["speedup"] = round(python_s / compiled_s, 2) if compiled_s else None
            sanity = fn(_speedups, *args)
            if sanity != fn(_fallback, *args):
                raise AssertionError(f"{name}: backends disagree, benchmark is void")
        rows.append(row)
    return rows


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--scale", type=int, default=1, help="workload multiplier")
    parser.add_argument("--repeats", type=int, default=3, help="best-of timing repeats")
    parser.add_argument("--json", action="store_true", help="machine-readable output")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s: %(message)s")

    if _speedups is None:
        LOGGER.warning("compiled extension not importable; timing the fallback only")

    rows = run(args.scale, args.repeats)
    if args.json:
        print(json.dumps(rows, indent=2, sort_keys=True))
        return 0
    header = f"{'kernel':18} {'python (s)':>12} {'compiled (s)':>13} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for row in rows:
        compiled = f"{row['compiled_s']:13.6f}" if "compiled_s" in row else f"{'-':>13}"
        speedup = f"{row['speedup']:7.2f}x" if row.get("speedup") else f"{'-':>8}"
        print(f"{row['kernel']:18} {row['python_s']:12.6f} {compiled} {speedup}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
