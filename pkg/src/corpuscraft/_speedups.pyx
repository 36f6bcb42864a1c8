# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled twins of the pure-Python kernels in ``_fallback``.

Same signatures, same results; only faster. The test suite checks the two
implementations agree, so behavioral changes must land in both.
"""

from libc.stdint cimport uint64_t


cdef uint64_t _FNV_OFFSET = 0xCBF29CE484222325ULL
cdef uint64_t _FNV_PRIME = 0x100000001B3ULL


cdef uint64_t _fnv1a64_raw(const unsigned char[:] data) nogil:
    cdef uint64_t h = _FNV_OFFSET
    cdef Py_ssize_t i
    for i in range(data.shape[0]):
        h ^= <uint64_t> data[i]
        h *= _FNV_PRIME
    return h


def fnv1a64(bytes data):
    """64-bit FNV-1a hash of *data*, returned as an unsigned int."""
    if len(data) == 0:
        return int(_FNV_OFFSET)
    return int(_fnv1a64_raw(data))


def hash_features(list words, buckets, bint bigrams=True):
    """Bucket indices of word unigram (and optional bigram) features."""
    cdef uint64_t b = <uint64_t> buckets
    cdef list out = []
    cdef bytes raw
    prev = None
    for word in words:
        raw = (<str> word).encode("utf-8")
        out.append(int(_fnv1a64_raw(raw) % b))
        if bigrams and prev is not None:
            raw = (<str> (prev + " " + word)).encode("utf-8")
            out.append(int(_fnv1a64_raw(raw) % b))
        prev = word
    return out


def bpe_merge(list symbols, dict ranks):
    """Apply ranked pair merges until no adjacent pair has a rank."""
    cdef Py_ssize_t i, n
    cdef long best_rank
    cdef list word, merged
    if len(symbols) < 2:
        return list(symbols)
    word = list(symbols)
    while len(word) > 1:
        best_rank = -1
        best_pair = None
        n = len(word)
        for i in range(n - 1):
            rank = ranks.get((word[i], word[i + 1]))
            if rank is not None and (best_rank < 0 or <long> rank < best_rank):
                best_rank = <long> rank
                best_pair = (word[i], word[i + 1])
        if best_pair is None:
            break
        first = best_pair[0]
        second = best_pair[1]
        merged = []
        i = 0
        n = len(word)
        while i < n:
            if i < n - 1 and word[i] == first and word[i + 1] == second:
                merged.append(<str> first + <str> second)
                i += 2
            else:
                merged.append(word[i])
                i += 1
        word = merged
    return word
