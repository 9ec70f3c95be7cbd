"""Compare the numba and numpy kernel backends.

Usage: python3 benchmarks/bench_kernels.py [--repeat N] [--size N]

Both backends are imported directly, so the RELCORR_DISABLE_NUMBA flag does
not matter here.  Each kernel is run once to warm up (and JIT-compile), then
timed; results are checked for equality before timings are reported.
"""

import argparse
import time

import numpy as np

from relcorr.correctness import _mask_relations
from relcorr.kernels import _numba, _numpy


def _keys(rng, n, density):
    m = int(n * n * density)
    return np.unique(rng.integers(0, n * n, size=m, dtype=np.int64))


def _time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def _same(a, b):
    if isinstance(a, tuple):
        return a[0] == b[0] and list(a[1]) == list(b[1])
    return np.array_equal(np.asarray(a), np.asarray(b))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--size", type=int, default=3000, help="states per relation")
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    n = args.size
    a, b = _keys(rng, n, 0.01), _keys(rng, n, 0.01)
    q = rng.integers(0, n * n, size=1_000_000, dtype=np.int64)
    # all partial functions on three states against all specs
    fns = _mask_relations(3, deterministic=True)
    specs = np.arange(2 ** 9, dtype=np.uint64)

    cases = [
        ("union", lambda k: k.union_keys(a, b)),
        ("inter", lambda k: k.inter_keys(a, b)),
        ("diff", lambda k: k.diff_keys(a, b)),
        ("member", lambda k: k.member(a, q)),
        ("converse", lambda k: k.converse_keys(a, n)),
        ("compose", lambda k: k.compose_keys(a, b, n)),
        ("row_counts", lambda k: k.row_counts(a, n)),
        ("bruteforce n=3", lambda k: k.bruteforce_equivalence(3, fns, specs, 5)),
    ]
    print(f"{'kernel':<16} {'numpy [ms]':>11} {'numba [ms]':>11} {'speedup':>8}")
    for name, fn in cases:
        ref, got = fn(_numpy), fn(_numba)  # warm-up and cross-check
        if not _same(ref, got):
            raise SystemExit(f"{name}: backends disagree")
        t_np = _time(lambda: fn(_numpy), args.repeat)
        t_nb = _time(lambda: fn(_numba), args.repeat)
        print(f"{name:<16} {t_np * 1e3:11.2f} {t_nb * 1e3:11.2f} {t_np / t_nb:8.1f}x")


if __name__ == "__main__":
    main()
