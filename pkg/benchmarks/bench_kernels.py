#!/usr/bin/env python3
"""Compare the compiled edit-distance kernel against the pure-Python fallback.

Times the raw kernel and the end-to-end TER scoring loop (whose greedy shift
search is the hot caller). Run after building the extension:

    python benchmarks/bench_kernels.py
"""

from __future__ import annotations

import random
import time

import numpy as np

from splocal import _kernels_py, kernels, metrics

try:
    from splocal import _kernels as _compiled
except ImportError:
    _compiled = None


def time_raw_kernel(impl, pairs, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        for a, b in pairs:
            impl.edit_distance(a, b)
        best = min(best, time.perf_counter() - start)
    return best


def time_ter(impl, corpus, repeats=3):
    original = kernels.edit_distance
    kernels.edit_distance = impl.edit_distance
    try:
        best = float("inf")
        for _ in range(repeats):
            start = time.perf_counter()
            for hyp, ref in corpus:
                metrics.sentence_ter(hyp, ref)
            best = min(best, time.perf_counter() - start)
        return best
    finally:
        kernels.edit_distance = original


def main():
    rng = random.Random(42)
    np_rng = np.random.default_rng(42)

    pairs = [
        (
            np_rng.integers(0, 40, size=rng.randint(10, 60)).astype(np.intc),
            np_rng.integers(0, 40, size=rng.randint(10, 60)).astype(np.intc),
        )
        for _ in range(2000)
    ]
    vocab = [f"w{i}" for i in range(30)]
    corpus = [
        (rng.choices(vocab, k=rng.randint(8, 25)), rng.choices(vocab, k=rng.randint(8, 25)))
        for _ in range(60)
    ]

    print(f"selected backend at import: {kernels.BACKEND}")
    pure_raw = time_raw_kernel(_kernels_py, pairs)
    print(f"raw edit_distance, pure python : {pure_raw * 1000:8.1f} ms / 2000 pairs")
    if _compiled is not None:
        compiled_raw = time_raw_kernel(_compiled, pairs)
        print(f"raw edit_distance, cython      : {compiled_raw * 1000:8.1f} ms / 2000 pairs")
        print(f"raw speedup                    : {pure_raw / compiled_raw:8.1f}x")

    pure_ter = time_ter(_kernels_py, corpus)
    print(f"sentence_ter loop, pure python : {pure_ter * 1000:8.1f} ms / 60 sentences")
    if _compiled is not None:
        compiled_ter = time_ter(_compiled, corpus)
        print(f"sentence_ter loop, cython      : {compiled_ter * 1000:8.1f} ms / 60 sentences")
        print(f"TER speedup                    : {pure_ter / compiled_ter:8.1f}x")
    if _compiled is None:
        print("compiled kernel not built; only the fallback was timed")


if __name__ == "__main__":
    main()
