"""Pure-Python kernel implementations.

Reference semantics for the hot loops (feature hashing, SimHash voting,
Hamming scans, BPE pair bookkeeping). The compiled backend in _native.pyx
must agree bit-for-bit with these functions; parity is pinned by tests.
"""

from __future__ import annotations

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF
FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * FNV_PRIME) & _MASK64
    return h


def simhash64(hashes, weights) -> int:
    votes = [0.0] * 64
    for h, w in zip(hashes, weights):
        for i in range(64):
            if (h >> i) & 1:
                votes[i] += w
            else:
                votes[i] -= w
    out = 0
    for i in range(64):
        if votes[i] > 0.0:  # exact zero resolves to 0
            out |= 1 << i
    return out


def hamming64(a: int, b: int) -> int:
    return (a ^ b).bit_count()


def hamming_scan(query: int, sigs: np.ndarray, radius: int) -> list:
    out = []
    for i, s in enumerate(sigs.tolist()):
        if (query ^ s).bit_count() <= radius:
            out.append(i)
    return out


def count_pairs(seq: np.ndarray) -> dict:
    counts: dict = {}
    s = seq.tolist()
    for a, b in zip(s, s[1:]):
        key = (a, b)
        counts[key] = counts.get(key, 0) + 1
    return counts


def accumulate_pairs(counts: dict, seq: np.ndarray, sign: int) -> None:
    s = seq.tolist()
    for a, b in zip(s, s[1:]):
        key = (a, b)
        c = counts.get(key, 0) + sign
        if c:
            counts[key] = c
        else:
            counts.pop(key, None)


def replace_pair(seq: np.ndarray, left: int, right: int, new_id: int) -> np.ndarray:
    s = seq.tolist()
    out = []
    i, n = 0, len(s)
    while i < n:
        if i + 1 < n and s[i] == left and s[i + 1] == right:
            out.append(new_id)
            i += 2
        else:
            out.append(s[i])
            i += 1
    return np.asarray(out, dtype=np.int32)


def bpe_encode(seq: np.ndarray, lefts, rights, news, vocab_size: int) -> np.ndarray:
    s = list(seq.tolist())
    present = [0] * vocab_size
    for t in s:
        present[t] += 1
    for left, right, new_id in zip(lefts.tolist(), rights.tolist(), news.tolist()):
        if left == right:
            if present[left] < 2:
                continue
        elif present[left] < 1 or present[right] < 1:
            continue
        out = []
        i, n = 0, len(s)
        while i < n:
            if i + 1 < n and s[i] == left and s[i + 1] == right:
                out.append(new_id)
                present[left] -= 1
                present[right] -= 1
                present[new_id] += 1
                i += 2
            else:
                out.append(s[i])
                i += 1
        s = out
    return np.asarray(s, dtype=np.int32)
