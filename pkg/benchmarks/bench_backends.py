"""Time the numba kernels against their numpy counterparts.

    python benchmarks/bench_backends.py [--gallery-size N] [--reps R]

Both backends are imported side by side from ``bvector._kernels``, so the
``BVECTOR_DISABLE_NUMBA`` flag does not matter here. Each row is the median
of ``--reps`` timed calls after one warm-up call (which also triggers JIT
compilation).
"""

import argparse
import statistics
import time

import numpy as np

from bvector import _kernels
from bvector.vecspace import n_words


def median_time(fn, reps):
    fn()
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def random_words(rng, n, nbits):
    w = rng.integers(0, 2**64, size=(n, n_words(nbits)), dtype=np.uint64)
    if nbits % 64:
        w[:, -1] &= np.uint64((1 << (nbits % 64)) - 1)
    return w


def cases(rng, gallery_size):
    gallery = random_words(rng, gallery_size, 150)
    probe = random_words(rng, 1, 150)[0]
    probes = random_words(rng, 200, 150)
    small = gallery[: max(1, gallery_size // 20)]
    dense = rng.standard_normal((gallery_size, 150))
    vec = rng.standard_normal(150)

    n, t = 20_000, 12
    xa, xp, xn = (rng.standard_normal(n) for _ in range(3))
    order = np.stack([rng.permutation(n) for _ in range(2)])

    def sgd(kernel):
        w, c = np.ones(t), np.zeros(t)
        return lambda: kernel(xa, xp, xn, w, c, order, 1.0, 1e-4 / n, 2.0, 1.0, 64)

    yield f"hamming scan 150-bit x {gallery_size}", (
        lambda: _kernels.hamming_scan_numba(gallery, probe),
        lambda: _kernels.hamming_scan_numpy(gallery, probe),
    )
    yield f"hamming matrix 200 x {small.shape[0]}", (
        lambda: _kernels.hamming_matrix_numba(probes, small),
        lambda: _kernels.hamming_matrix_numpy(probes, small),
    )
    yield f"dot scan 150-dim x {gallery_size}", (
        lambda: _kernels.dot_scan_numba(dense, vec),
        lambda: _kernels.dot_scan_numpy(dense, vec),
    )
    yield f"block sgd T={t}, 2 epochs x {n}", (sgd(_kernels.block_sgd_numba), sgd(_kernels.block_sgd_numpy))


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--gallery-size", type=int, default=100_000)
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)
    if not _kernels.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<36}{'numba ms':>11}{'numpy ms':>11}{'ratio':>8}")
    for name, (fast, slow) in cases(rng, args.gallery_size):
        a = median_time(fast, args.reps)
        b = median_time(slow, args.reps)
        print(f"{name:<36}{1e3 * a:>11.3f}{1e3 * b:>11.3f}{b / a:>8.1f}")


if __name__ == "__main__":
    main()
