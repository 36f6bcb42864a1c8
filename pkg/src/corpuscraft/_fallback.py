"""Pure-Python implementations of the hot kernels.

These are the reference implementations; ``corpuscraft._speedups`` provides
compiled equivalents with identical observable behavior. Keep the two in
lockstep: the test suite asserts they agree on random inputs.
"""

from __future__ import annotations

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash of *data*, returned as an unsigned int."""
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


def hash_features(words: list[str], buckets: int, bigrams: bool = True) -> list[int]:
    """Bucket indices of word unigram (and optional bigram) features.

    A bigram feature is hashed as the two words joined by a single space.
    """
    out = []
    prev = None
    for word in words:
        out.append(fnv1a64(word.encode("utf-8")) % buckets)
        if bigrams and prev is not None:
            out.append(fnv1a64((prev + " " + word).encode("utf-8")) % buckets)
        prev = word
    return out


def bpe_merge(symbols: list[str], ranks: dict[tuple[str, str], int]) -> list[str]:
    """Apply ranked pair merges until no adjacent pair has a rank.

    On each round the adjacent pair with the lowest rank is merged at every
    non-overlapping occurrence, scanning left to right. This matches the
    classic byte-pair encoder reference behavior.
    """
    if len(symbols) < 2:
        return list(symbols)
    word = list(symbols)
    while len(word) > 1:
        best_rank = -1
        best_pair = None
        for i in range(len(word) - 1):
            rank = ranks.get((word[i], word[i + 1]))
            if rank is not None and (best_rank < 0 or rank < best_rank):
                best_rank = rank
                best_pair = (word[i], word[i + 1])
        if best_pair is None:
            break
        first, second = best_pair
        merged = []
        i = 0
        n = len(word)
        while i < n:
            if i < n - 1 and word[i] == first and word[i + 1] == second:
                merged.append(first + second)
                i += 2
            else:
                merged.append(word[i])
                i += 1
        word = merged
    return word
