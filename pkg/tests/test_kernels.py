"""Kernel unit behavior plus native/pure backend parity.

Both backend modules are imported directly (bypassing the import-time
selection) so a single process can compare them.
"""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from corpusforge._kernels import _pure
from oracles import ref_encode_ids, ref_fnv1a64, ref_hamming, ref_neighbors, ref_replace

try:
    from corpusforge._kernels import _native
    BACKENDS = [_pure, _native]
except ImportError:
    _native = None
    BACKENDS = [_pure]

needs_native = pytest.mark.skipif(_native is None, reason="compiled extension not built")


@pytest.fixture(params=BACKENDS, ids=lambda m: m.__name__.rsplit("_", 1)[-1])
def K(request):
    return request.param


@given(st.binary(max_size=200))
def test_fnv1a64_matches_reference(data):
    for mod in BACKENDS:
        assert mod.fnv1a64(data) == ref_fnv1a64(data)


def test_fnv1a64_known_values(K):
    # standard FNV-1a test vectors
    assert K.fnv1a64(b"") == 0xCBF29CE484222325
    assert K.fnv1a64(b"a") == 0xAF63DC4C8601EC8C
    assert K.fnv1a64(b"foobar") == 0x85944171F73967E8


@given(st.integers(0, 2**64 - 1), st.integers(0, 2**64 - 1))
def test_hamming64(a, b):
    for mod in BACKENDS:
        assert mod.hamming64(a, b) == ref_hamming(a, b)


@given(
    st.lists(st.integers(0, 2**64 - 1), min_size=0, max_size=40),
    st.data(),
)
def test_simhash64_parity_and_range(hashes, data):
    weights = [data.draw(st.floats(0.1, 10.0)) for _ in hashes]
    got = [mod.simhash64(np.array(hashes, dtype=np.uint64), np.array(weights)) for mod in BACKENDS]
    assert len(set(got)) == 1
    assert 0 <= got[0] < 2**64


def test_simhash64_single_feature_is_identity(K):
    # one feature cannot lose any bit vote
    h = ref_fnv1a64(b"only feature")
    assert K.simhash64(np.array([h], dtype=np.uint64), np.array([3.0])) == h


def test_simhash64_empty_is_zero(K):
    assert K.simhash64(np.array([], dtype=np.uint64), np.array([])) == 0


@given(
    st.lists(st.integers(0, 2**64 - 1), min_size=1, max_size=300),
    st.integers(0, 2**64 - 1),
    st.integers(0, 8),
)
def test_hamming_scan_matches_bruteforce(sigs, query, radius):
    arr = np.array(sigs, dtype=np.uint64)
    expected = ref_neighbors(query, sigs, radius)
    for mod in BACKENDS:
        assert list(mod.hamming_scan(query, arr, radius)) == expected


@given(st.lists(st.integers(0, 30), min_size=0, max_size=200))
def test_count_pairs(seq):
    expected: dict = {}
    for a, b in zip(seq, seq[1:]):
        expected[(a, b)] = expected.get((a, b), 0) + 1
    arr = np.array(seq, dtype=np.int32)
    for mod in BACKENDS:
        assert mod.count_pairs(arr) == expected


@given(st.lists(st.integers(0, 30), min_size=0, max_size=200))
def test_accumulate_pairs_roundtrip(seq):
    arr = np.array(seq, dtype=np.int32)
    for mod in BACKENDS:
        counts = mod.count_pairs(arr)
        mod.accumulate_pairs(counts, arr, -1)
        assert all(v == 0 for v in counts.values())
        mod.accumulate_pairs(counts, arr, 1)
        base = {k: v for k, v in counts.items() if v}
        assert base == mod.count_pairs(arr)


@given(
    st.lists(st.integers(0, 6), min_size=0, max_size=120),
    st.integers(0, 6),
    st.integers(0, 6),
)
def test_replace_pair_matches_reference(seq, left, right):
    expected = ref_replace(seq, left, right, 99)
    arr = np.array(seq, dtype=np.int32)
    for mod in BACKENDS:
        got = mod.replace_pair(arr, left, right, 99)
        assert list(got) == expected
        # input must not be mutated
        assert list(arr) == seq


def test_replace_pair_overlapping_run(K):
    # aaa -> (new, a): leftmost-first, non-overlapping
    out = K.replace_pair(np.array([7, 7, 7], dtype=np.int32), 7, 7, 9)
    assert list(out) == [9, 7]
    out = K.replace_pair(np.array([7, 7, 7, 7], dtype=np.int32), 7, 7, 9)
    assert list(out) == [9, 9]


@given(st.lists(st.integers(0, 255), min_size=0, max_size=80), st.data())
def test_bpe_encode_matches_sequential_replacement(byte_seq, data):
    # random but well-formed merge table: operands must already exist
    n_merges = data.draw(st.integers(0, 12))
    merges = []
    for k in range(n_merges):
        hi = 256 + k
        merges.append((data.draw(st.integers(0, hi - 1)), data.draw(st.integers(0, hi - 1))))
    expected = ref_encode_ids(bytes(byte_seq), merges)
    seq = np.array(byte_seq, dtype=np.int32)
    lefts = np.array([l for l, _ in merges], dtype=np.int32)
    rights = np.array([r for _, r in merges], dtype=np.int32)
    news = np.arange(256, 256 + n_merges, dtype=np.int32)
    for mod in BACKENDS:
        got = mod.bpe_encode(seq, lefts, rights, news, 256 + n_merges)
        assert list(got) == expected


@needs_native
def test_backend_constants_agree():
    assert _native.FNV_OFFSET == _pure.FNV_OFFSET
    assert _native.FNV_PRIME == _pure.FNV_PRIME
