"""Benchmark the jitted kernels against the pure-numpy fallback.

Run:  python3 benchmarks/bench_kernels.py
The active dispatch follows STRUCTKV_NUMBA; this script always times both
paths explicitly and checks they agree.
"""

import time

import numpy as np

from structkv import kernels


def timeit(fn, *args, reps=5):
    best = float("inf")
    for _ in range(reps):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_attention_mass():
    rng = np.random.default_rng(0)
    q = rng.standard_normal((128, 64))
    k = rng.standard_normal((4096, 64))
    a = kernels.attention_mass_numpy(q, k)
    b = kernels.attention_mass_numba(q, k)  # first call compiles
    assert np.allclose(a, b, atol=1e-10)
    return (
        "attention_mass (W=128, L=4096, d=64)",
        timeit(kernels.attention_mass_numpy, q, k),
        timeit(kernels.attention_mass_numba, q, k),
    )


def bench_sliding_mean():
    rng = np.random.default_rng(1)
    u = rng.random(4096)
    a = kernels.sliding_mean_numpy(u, 5)
    b = kernels.sliding_mean_numba(u, 5)
    assert np.allclose(a, b, atol=1e-9)
    return (
        "sliding_mean (n=4096, w=5)",
        timeit(kernels.sliding_mean_numpy, u, 5, reps=20),
        timeit(kernels.sliding_mean_numba, u, 5, reps=20),
    )


def bench_levenshtein():
    rng = np.random.default_rng(2)
    a = rng.integers(0, 60, size=1200).astype(np.int64)
    b = rng.integers(0, 60, size=1400).astype(np.int64)
    assert kernels.levenshtein_numpy(a, b) == kernels.levenshtein_numba(a, b)
    return (
        "levenshtein (1200 x 1400)",
        timeit(kernels.levenshtein_numpy, a, b),
        timeit(kernels.levenshtein_numba, a, b),
    )


def main():
    if not kernels.HAS_NUMBA:
        print("numba unavailable; nothing to compare")
        return
    print(f"active path: {'numba' if kernels.USE_NUMBA else 'numpy'} "
          f"(STRUCTKV_NUMBA flag)")
    rows = [bench_attention_mass(), bench_sliding_mean(), bench_levenshtein()]
    print(f"{'kernel':<40} {'numpy':>10} {'numba':>10} {'speedup':>9}")
    for name, t_np, t_nb in rows:
        print(f"{name:<40} {t_np * 1e3:>8.2f}ms {t_nb * 1e3:>8.2f}ms {t_np / t_nb:>8.1f}x")


if __name__ == "__main__":
    main()
