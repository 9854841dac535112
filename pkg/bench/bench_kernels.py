"""Benchmark the compiled kernels against the pure-Python fallback.

Runs each hot kernel on synthetic workloads under both backends and prints a
speedup table. Backends are compared in separate subprocesses because the
selection happens at import time.

Usage: python3 bench/bench_kernels.py [--repeats 5]
"""

import argparse
import json
import os
import subprocess
import sys
import time

_WORKER = """
import json, sys, time
import numpy as np

from corpusforge import _kernels as K
from corpusforge import synth, dedup, tokenizer

rng = np.random.default_rng(12345)
repeats = int(sys.argv[1])

def best_of(fn, *args):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)

results = {"backend": K.BACKEND}

# fnv1a64 over 20k short byte strings
blobs = [bytes(rng.integers(0, 256, size=24, dtype=np.uint8)) for _ in range(20_000)]
results["fnv1a64_20k"] = best_of(lambda: [K.fnv1a64(b) for b in blobs])

# simhash64 with 512 weighted features, 2k calls
hashes = [int(x) for x in rng.integers(0, 2**63, size=512)]
weights = [float(w) for w in rng.random(512) + 0.1]
results["simhash64_2k"] = best_of(lambda: [K.simhash64(hashes, weights) for _ in range(2_000)])

# hamming_scan: 200 queries over 200k signatures
sigs = rng.integers(0, 2**63, size=200_000, dtype=np.uint64)
queries = [int(x) for x in rng.integers(0, 2**63, size=200)]
results["hamming_scan_200x200k"] = best_of(lambda: [K.hamming_scan(q, sigs, 3) for q in queries])

# replace_pair over a 200k-symbol sequence, 100 random pairs
seq = rng.integers(0, 64, size=200_000).astype(np.int32)
pairs = [(int(a), int(b)) for a, b in rng.integers(0, 64, size=(100, 2))]
def run_replace():
    for i, (a, b) in enumerate(pairs):
        K.replace_pair(seq, a, b, 256 + i)
results["replace_pair_100x200k"] = best_of(run_replace)

# count_pairs over the same sequence
results["count_pairs_200k"] = best_of(K.count_pairs, seq)

# end-to-end BPE encode of the bundled corpus with a 2k vocab
docs = synth.mini_corpus(n_docs=500, seed=1)
vocab = tokenizer.bpe_train(docs, target_vocab=2048)
texts = [d.text for d in docs]
results["bpe_encode_500docs"] = best_of(
    lambda: [tokenizer.encode(vocab, t) for t in texts])

# end-to-end dedup signature pass on 500 docs
def run_sigs():
    idx = dedup.SigIndex()
    for d in docs:
        idx.process(d)
results["dedup_pass_500docs"] = best_of(run_sigs)

print(json.dumps(results))
"""


def run_backend(pure: bool, repeats: int) -> dict:
    env = dict(os.environ)
    if pure:
        env["CORPUSFORGE_PURE_PYTHON"] = "1"
    else:
        env.pop("CORPUSFORGE_PURE_PYTHON", None)
    out = subprocess.run(
        [sys.executable, "-c", _WORKER, str(repeats)],
        capture_output=True, text=True, env=env, check=True,
    )
    return json.loads(out.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=5, help="best-of-N timing")
    args = ap.parse_args()

    t0 = time.time()
    native = run_backend(pure=False, repeats=args.repeats)
    pure = run_backend(pure=True, repeats=args.repeats)
    if native["backend"] != "native":
        print("note: compiled extension unavailable; comparing pure vs pure")

    keys = [k for k in native if k != "backend"]
    width = max(len(k) for k in keys)
    print(f"{'kernel':<{width}}  {'native':>10}  {'pure':>10}  {'speedup':>8}")
    for k in keys:
        ratio = pure[k] / native[k] if native[k] else float("inf")
        print(f"{k:<{width}}  {native[k]*1e3:>8.2f}ms  {pure[k]*1e3:>8.2f}ms  {ratio:>7.1f}x")
    print(f"(best of {args.repeats}, total wall {time.time() - t0:.1f}s)")


if __name__ == "__main__":
    main()
