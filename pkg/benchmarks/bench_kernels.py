"""Compare the compiled kernels with their pure-numpy counterparts.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each row reports the best wall time of ``--repeat`` runs after one warm-up
call, so compilation time is excluded.
"""

import argparse
import time

import numpy as np

from cellgame import _backend, kernels


def _best(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def _discrete_case(seed, m, n):
    rng = np.random.default_rng(seed)
    gains = 1.0 - rng.random((m, n))
    beta = rng.uniform(0.02, 0.3, m)
    return gains, beta, 1.0


def _moves(choose, gains, beta, sigma2, steps):
    m = gains.shape[0]
    assign = np.zeros(m, dtype=np.int64)
    for t in range(steps):
        i = t % m
        target, _, _ = choose(gains, beta, sigma2, assign, i, False, False, 0.0, -1.0)
        assign[i] = target


def _nonatomic_case(seed, nl, n):
    rng = np.random.default_rng(seed)
    gamma = np.full(nl, 0.02)
    masses = rng.random(nl) + 0.1
    masses *= 0.8 * n / (gamma @ masses)
    g = gamma[:, None] / (1.0 - rng.random((nl, n)))
    m0 = np.repeat(masses[:, None] / n, n, axis=1)
    return g, gamma, m0, masses


def cases():
    gains, beta, s2 = _discrete_case(0, 9, 4)
    yield "enumerate 4^9 profiles", (
        lambda: kernels.enumerate_profiles_nb(gains, beta, s2, False, 0.0),
        lambda: kernels.enumerate_profiles_np(gains, beta, s2, False, 0.0),
    )
    yield "enumerate 4^9 profiles, tolled", (
        lambda: kernels.enumerate_profiles_nb(gains, beta, s2, True, 0.0),
        lambda: kernels.enumerate_profiles_np(gains, beta, s2, True, 0.0),
    )
    g2, b2, _ = _discrete_case(1, 40, 8)
    yield "5000 best-response moves, M=40 N=8", (
        lambda: _moves(kernels.choose_move_nb, g2, b2, 1.0, 5000),
        lambda: _moves(kernels.choose_move_np, g2, b2, 1.0, 5000),
    )
    g, gamma, m0, masses = _nonatomic_case(2, 8, 8)
    thresh = 1e-9
    yield "pairwise descent, L=8 N=8", (
        lambda: kernels.pairwise_descent_nb(g, gamma, m0, False, 1e-9, 100_000, thresh),
        lambda: kernels.pairwise_descent_np(g, gamma, m0, False, 1e-9, 100_000, thresh),
    )


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    if not _backend.HAVE_NUMBA:
        print("numba is not installed; the '_nb' column runs interpreted Python")
    print(f"{'case':40s} {'numba [s]':>12s} {'numpy [s]':>12s} {'speed-up':>9s}")
    for name, (fast, slow) in cases():
        t_nb, t_np = _best(fast, args.repeat), _best(slow, args.repeat)
        print(f"{name:40s} {t_nb:12.5f} {t_np:12.5f} {t_np / t_nb:9.1f}")


if __name__ == "__main__":
    main()
