"""Compare the compiled kernels against the NumPy fallback.

Usage: python benchmarks/bench_backends.py
"""

import time

import numpy as np

from dynspike import backends
from dynspike import systems as ds


def _time(fn, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    try:
        compiled = backends.get_backend("compiled")
    except ImportError:
        print("compiled backend not built; run pip install -e . --no-build-isolation")
        return
    numpy_b = backends.get_backend("numpy")

    rows = []
    sys = ds.mixed_oscillator(10.0)
    p = np.asarray(sys.params, dtype=np.float64)

    for n, label in ((8, "traj batch n=8 (RL-style)"), (4096, "traj batch n=4096")):
        s0 = np.random.default_rng(0).uniform(0, 1, size=(n, 3))
        args = (sys.system_id, p, s0, 0.01, 160, 5, False, 1e12)
        t_c = _time(lambda: compiled.traj_batch(*args))
        t_n = _time(lambda: numpy_b.traj_batch(*args))
        rows.append((label, t_n, t_c))

    s0 = np.array([1.0, 0.2, -1.0])
    for steps, label in ((20_000, "lyapunov 20k steps"), (50_000, "lyapunov 50k steps")):
        args = (ds.lorenz().system_id, np.asarray(ds.lorenz().params, dtype=np.float64),
                s0, 0.01, steps, 5, 0, 1e-10, 1e12)
        t_c = _time(lambda: compiled.lyap_core(*args), repeat=2)
        t_n = _time(lambda: numpy_b.lyap_core(*args), repeat=1)
        rows.append((label, t_n, t_c))

    print(f"{'kernel':<28} {'numpy':>10} {'compiled':>10} {'speedup':>9}")
    for label, t_n, t_c in rows:
        print(f"{label:<28} {t_n:>9.3f}s {t_c:>9.3f}s {t_n / t_c:>8.1f}x")


if __name__ == "__main__":
    main()
