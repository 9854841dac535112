# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel implementations. Semantics match _pure.py exactly."""

import numpy as np

cdef extern from *:
    """
    #include <stdint.h>
    static inline int cf_popcnt64(uint64_t x) { return __builtin_popcountll(x); }
    """
    int cf_popcnt64(unsigned long long x) nogil

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3

cdef unsigned long long _FNV_OFFSET = 0xCBF29CE484222325ULL
cdef unsigned long long _FNV_PRIME = 0x100000001B3ULL


def fnv1a64(bytes data):
    cdef const unsigned char[:] view = data
    cdef unsigned long long h = _FNV_OFFSET
    cdef Py_ssize_t i
    for i in range(view.shape[0]):
        h ^= view[i]
        h *= _FNV_PRIME
    return h


def simhash64(hashes, weights):
    cdef unsigned long long[:] hv = np.ascontiguousarray(hashes, dtype=np.uint64)
    cdef double[:] wv = np.ascontiguousarray(weights, dtype=np.float64)
    cdef double votes[64]
    cdef Py_ssize_t i, j
    cdef unsigned long long h, out = 0
    cdef double w
    for j in range(64):
        votes[j] = 0.0
    for i in range(hv.shape[0]):
        h = hv[i]
        w = wv[i]
        for j in range(64):
            if (h >> j) & 1ULL:
                votes[j] += w
            else:
                votes[j] -= w
    for j in range(64):
        if votes[j] > 0.0:
            out |= 1ULL << j
    return out


def hamming64(a, b):
    cdef unsigned long long ua = a, ub = b
    return cf_popcnt64(ua ^ ub)


def hamming_scan(query, sigs, int radius):
    cdef unsigned long long q = query
    cdef unsigned long long[:] sv = np.ascontiguousarray(sigs, dtype=np.uint64)
    cdef Py_ssize_t i
    out = []
    for i in range(sv.shape[0]):
        if cf_popcnt64(q ^ sv[i]) <= radius:
            out.append(i)
    return out


def count_pairs(seq):
    cdef int[:] s = seq
    cdef Py_ssize_t i, n = s.shape[0]
    counts = {}
    for i in range(n - 1):
        key = (s[i], s[i + 1])
        counts[key] = counts.get(key, 0) + 1
    return counts


def accumulate_pairs(dict counts, seq, int sign):
    cdef int[:] s = seq
    cdef Py_ssize_t i, n = s.shape[0]
    cdef long c
    for i in range(n - 1):
        key = (s[i], s[i + 1])
        c = counts.get(key, 0) + sign
        if c:
            counts[key] = c
        else:
            counts.pop(key, None)


def replace_pair(seq, int left, int right, int new_id):
    cdef int[:] s = seq
    cdef Py_ssize_t i = 0, k = 0, n = s.shape[0]
    out_arr = np.empty(n, dtype=np.int32)
    cdef int[:] out = out_arr
    while i < n:
        if i + 1 < n and s[i] == left and s[i + 1] == right:
            out[k] = new_id
            i += 2
        else:
            out[k] = s[i]
            i += 1
        k += 1
    return out_arr[:k].copy()


def bpe_encode(seq, lefts, rights, news, int vocab_size):
    cdef int[:] s_in = seq
    cdef int[:] lv = lefts
    cdef int[:] rv = rights
    cdef int[:] nv = news
    cdef Py_ssize_t n = s_in.shape[0], m, i, k, mi
    cdef int left, right, new_id

    buf_a = np.array(seq, dtype=np.int32)
    buf_b = np.empty(n, dtype=np.int32)
    cdef int[:] cur = buf_a
    cdef int[:] nxt = buf_b
    present_arr = np.zeros(vocab_size, dtype=np.int64)
    cdef long long[:] present = present_arr
    for i in range(n):
        present[cur[i]] += 1

    m = n
    for mi in range(lv.shape[0]):
        left = lv[mi]
        right = rv[mi]
        new_id = nv[mi]
        if left == right:
            if present[left] < 2:
                continue
        elif present[left] < 1 or present[right] < 1:
            continue
        i = 0
        k = 0
        while i < m:
            if i + 1 < m and cur[i] == left and cur[i + 1] == right:
                nxt[k] = new_id
                present[left] -= 1
                present[right] -= 1
                present[new_id] += 1
                i += 2
            else:
                nxt[k] = cur[i]
                i += 1
            k += 1
        cur, nxt = nxt, cur
        m = k
    return np.asarray(cur[:m]).copy()
