"""Time the numba kernels against their numpy fallbacks.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit

import numpy as np

from qembed._kernels import HAVE_NUMBA, NUMBA_KERNELS, NUMPY_KERNELS


def cases(rng):
    xs = rng.uniform(-np.pi, np.pi, 1000)
    thetas = rng.uniform(-np.pi, np.pi, 3)
    states = NUMPY_KERNELS["feature_states"](xs, thetas)
    small = states[:50]
    is_a = np.arange(50) < 25
    n = 2000
    init = np.tile([1.0 + 0j, 0.0 + 0j], (n, 1))
    atomic = (
        rng.uniform(0, 20e-6, n),
        rng.uniform(0, 20e-6, n),
        rng.uniform(0, 20e-6, n),
        np.full(n, 2 * np.pi * 38e3),
        np.full(n, 2 * np.pi * 6.57e3),
        init,
    )
    return {
        "feature_states (1000 points)": ("feature_states", (xs, thetas)),
        "fidelity_matrix (1000 x 1000)": ("fidelity_matrix", (states,)),
        "class_overlap_sums (50-point batch)": ("class_overlap_sums", (small, is_a)),
        "atomic_states (2000 sequences)": ("atomic_states", atomic),
    }


def best_time(fn, args, repeat):
    fn(*args)  # warm-up, includes JIT compilation
    number = 10
    return min(timeit.repeat(lambda: fn(*args), number=number, repeat=repeat)) / number


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    print(f"{'kernel':<38}{'numpy':>12}{'numba':>12}{'speedup':>10}")
    for label, (name, kargs) in cases(np.random.default_rng(0)).items():
        t_np = best_time(NUMPY_KERNELS[name], kargs, args.repeat)
        t_nb = best_time(NUMBA_KERNELS[name], kargs, args.repeat)
        a, b = NUMPY_KERNELS[name](*kargs), NUMBA_KERNELS[name](*kargs)
        assert np.allclose(a, b, atol=1e-12), name
        print(f"{label:<38}{t_np * 1e6:>10.1f}us{t_nb * 1e6:>10.1f}us{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
