"""Compare the compiled kernel extension against the numpy fallback.

Run as: python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from rocdd import _kernels_py

try:
    from rocdd import _kernels as _ext
except ImportError:
    _ext = None


def random_generators(rng, n, dim):
    a = rng.standard_normal((n, dim, dim)) + 1j * rng.standard_normal((n, dim, dim))
    return 0.5 * (a + a.conj().transpose(0, 2, 1))  # Hermitian, realistic case


def bench(fn, *args, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.default_rng(0)
    print(f"{'case':<28} {'python':>10} {'cython':>10} {'speedup':>8}")
    for dim in (2, 4, 8, 12, 16):
        gens = random_generators(rng, 200, dim) * 1e8
        dt = 2e-9
        t_py = bench(lambda: _kernels_py.chain_propagator(gens, dt))
        row = f"chain 200 slices, dim {dim:<3}"
        if _ext is None:
            print(f"{row:<28} {t_py * 1e3:>9.2f}ms {'n/a':>10}")
            continue
        t_cy = bench(lambda: _ext.chain_propagator(gens, dt))
        print(f"{row:<28} {t_py * 1e3:>9.2f}ms {t_cy * 1e3:>9.2f}ms {t_py / t_cy:>7.1f}x")
        u_py = _kernels_py.chain_propagator(gens, dt)
        u_cy = _ext.chain_propagator(gens, dt)
        err = np.max(np.abs(u_py - u_cy))
        if err > 1e-10:
            print(f"  WARNING: backend mismatch {err:.2e}")


if __name__ == "__main__":
    main()
