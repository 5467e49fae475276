"""Benchmark the compiled kernels against the pure-Python fallback.

Usage: python benchmarks/bench_kernels.py [--words 600] [--repeat 5]

Covers the two hot paths: word-level alignment at script scale (the
simulator and the evaluation suite hammer this) and waveform peaks over a
minute of audio.
"""

import argparse
import random
import time
from array import array

from caploop import _kernels_py

try:
    from caploop import _ckernels
except ImportError:
    _ckernels = None


def time_fn(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--words", type=int, default=600, help="script length in words")
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    rng = random.Random(0)
    vocab = list(range(300))
    ref = array("i", rng.choices(vocab, k=args.words))
    hyp = array("i", [w if rng.random() > 0.13 else 9999 for w in ref])
    samples = array("h", [rng.randint(-32768, 32767) for _ in range(16000 * 60)])
    window = 160

    backends = [("python", _kernels_py)]
    if _ckernels is not None:
        backends.append(("c", _ckernels))
    else:
        print("compiled kernels unavailable; benchmarking the fallback only")

    results = {}
    for name, impl in backends:
        lev = time_fn(lambda: impl.levenshtein_ops(ref, hyp), args.repeat)
        peaks = time_fn(lambda: impl.window_max_abs(samples, window), args.repeat)
        results[name] = (lev, peaks)
        print(f"{name:>7}: align {args.words}x{args.words} words {lev * 1e3:8.2f} ms   "
              f"peaks 60s/16kHz {peaks * 1e3:8.2f} ms")

    if len(results) == 2:
        lev_speedup = results["python"][0] / results["c"][0]
        peak_speedup = results["python"][1] / results["c"][1]
        print(f"speedup: align {lev_speedup:.0f}x, peaks {peak_speedup:.0f}x")


if __name__ == "__main__":
    main()
