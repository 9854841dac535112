"""Kernel backend selection.

Imports the compiled extension when available, otherwise the pure-Python
fallback. Set CORPUSFORGE_PURE_PYTHON=1 to force the fallback (used by the
parity tests and the kernel benchmark).
"""

import os

if os.environ.get("CORPUSFORGE_PURE_PYTHON") == "1":
    from corpusforge._kernels import _pure as _impl

    BACKEND = "pure"
else:
    try:
        from corpusforge._kernels import _native as _impl  # type: ignore[attr-defined]

        BACKEND = "native"
    except ImportError:
        from corpusforge._kernels import _pure as _impl

        BACKEND = "pure"

FNV_OFFSET = _impl.FNV_OFFSET
FNV_PRIME = _impl.FNV_PRIME
fnv1a64 = _impl.fnv1a64
simhash64 = _impl.simhash64
hamming64 = _impl.hamming64
hamming_scan = _impl.hamming_scan
count_pairs = _impl.count_pairs
accumulate_pairs = _impl.accumulate_pairs
replace_pair = _impl.replace_pair
bpe_encode = _impl.bpe_encode
