"""Hot loops: Hamming/dot scans and the per-block SGD trainer.

Every kernel exists twice, as a numba ``@njit`` function and as a pure
numpy function with the same signature. The numba path is used unless
numba is missing or the environment variable ``BVECTOR_DISABLE_NUMBA`` is
set to a non-empty value other than ``0``. Both paths compute the same
numbers; scan results are bit-identical, SGD results agree to rounding.
The dense dot-product scan always uses numpy (BLAS), which is the faster
of the two on every machine tried.
"""

import os

import numpy as np

_M1 = np.uint64(0x5555555555555555)
_M2 = np.uint64(0x3333333333333333)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)


# -- numpy reference path -----------------------------------------------------


def hamming_scan_numpy(gallery, probe):
    return np.bitwise_count(gallery ^ probe).sum(axis=1, dtype=np.int64)


def hamming_matrix_numpy(probes, gallery, chunk=256):
    out = np.empty((probes.shape[0], gallery.shape[0]), dtype=np.int64)
    for start in range(0, probes.shape[0], chunk):
        block = probes[start : start + chunk, None, :] ^ gallery[None, :, :]
        out[start : start + chunk] = np.bitwise_count(block).sum(axis=2, dtype=np.int64)
    return out


def dot_scan_numpy(gallery, probe):
    return gallery @ probe


def block_sgd_numpy(xa, xp, xn, w, c, order, lr, reg, beta, margin, batch_size):
    epochs, n = order.shape
    losses = np.empty(epochs)
    for e in range(epochs):
        total = 0.0
        for start in range(0, n, batch_size):
            idx = order[e, start : start + batch_size]
            a, p, q = xa[idx, None], xp[idx, None], xn[idx, None]
            ua = np.tanh(beta * (a * w + c))
            up = np.tanh(beta * (p * w + c))
            un = np.tanh(beta * (q * w + c))
            s = 0.5 * (ua * (un - up)).sum(axis=1) + margin
            active = (s > 0.0)[:, None]
            total += s[s > 0.0].sum()
            ga = np.where(active, 0.5 * (un - up), 0.0) * beta * (1.0 - ua * ua)
            gp = np.where(active, -0.5 * ua, 0.0) * beta * (1.0 - up * up)
            gn = np.where(active, 0.5 * ua, 0.0) * beta * (1.0 - un * un)
            gw = (ga * a + gp * p + gn * q).sum(axis=0)
            gc = (ga + gp + gn).sum(axis=0)
            m = idx.shape[0]
            w -= lr * (gw / m + reg * w)
            c -= lr * (gc / m + reg * c)
        losses[e] = total
    return losses


# -- numba path ---------------------------------------------------------------


try:
    from numba import config as _numba_config
    from numba import njit, prange

    if "NUMBA_THREADING_LAYER_PRIORITY" not in os.environ:
        # tbb last: an outdated system TBB only produces a warning before fallback.
        _numba_config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

if HAVE_NUMBA:

    @njit(inline="always", cache=True)
    def _popcount64(x):
        x = x - ((x >> np.uint64(1)) & _M1)
        x = (x & _M2) + ((x >> np.uint64(2)) & _M2)
        x = (x + (x >> np.uint64(4))) & _M4
        return (x * _H01) >> np.uint64(56)

    @njit(cache=True, parallel=True, nogil=True)
    def hamming_scan_numba(gallery, probe):
        n, nw = gallery.shape
        out = np.empty(n, dtype=np.int64)
        for i in prange(n):
            acc = np.uint64(0)
            for j in range(nw):
                acc += _popcount64(gallery[i, j] ^ probe[j])
            out[i] = acc
        return out

    @njit(cache=True, parallel=True, nogil=True)
    def hamming_matrix_numba(probes, gallery):
        m, nw = probes.shape
        n = gallery.shape[0]
        out = np.empty((m, n), dtype=np.int64)
        for r in prange(m):
            for i in range(n):
                acc = np.uint64(0)
                for j in range(nw):
                    acc += _popcount64(gallery[i, j] ^ probes[r, j])
                out[r, i] = acc
        return out

    @njit(cache=True, parallel=True, nogil=True)
    def dot_scan_numba(gallery, probe):
        n, d = gallery.shape
        out = np.empty(n, dtype=np.float64)
        for i in prange(n):
            acc = 0.0
            for j in range(d):
                acc += gallery[i, j] * probe[j]
            out[i] = acc
        return out

    @njit(cache=True, nogil=True)
    def block_sgd_numba(xa, xp, xn, w, c, order, lr, reg, beta, margin, batch_size):
        epochs, n = order.shape
        t = w.shape[0]
        losses = np.empty(epochs)
        ua = np.empty(t)
        up = np.empty(t)
        un = np.empty(t)
        gw = np.empty(t)
        gc = np.empty(t)
        for e in range(epochs):
            total = 0.0
            for start in range(0, n, batch_size):
                stop = min(start + batch_size, n)
                gw[:] = 0.0
                gc[:] = 0.0
                for k in range(start, stop):
                    r = order[e, k]
                    a = xa[r]
                    p = xp[r]
                    q = xn[r]
                    s = 0.0
                    for j in range(t):
                        ua[j] = np.tanh(beta * (a * w[j] + c[j]))
                        up[j] = np.tanh(beta * (p * w[j] + c[j]))
                        un[j] = np.tanh(beta * (q * w[j] + c[j]))
                        s += ua[j] * (un[j] - up[j])
                    s = 0.5 * s + margin
                    if s > 0.0:
                        total += s
                        for j in range(t):
                            ga = 0.5 * (un[j] - up[j]) * beta * (1.0 - ua[j] * ua[j])
                            gp = -0.5 * ua[j] * beta * (1.0 - up[j] * up[j])
                            gn = 0.5 * ua[j] * beta * (1.0 - un[j] * un[j])
                            gw[j] += ga * a + gp * p + gn * q
                            gc[j] += ga + gp + gn
                m = stop - start
                for j in range(t):
                    w[j] -= lr * (gw[j] / m + reg * w[j])
                    c[j] -= lr * (gc[j] / m + reg * c[j])
            losses[e] = total
        return losses


def _numba_requested():
    flag = os.environ.get("BVECTOR_DISABLE_NUMBA", "")
    return flag in ("", "0")


if HAVE_NUMBA and _numba_requested():
    BACKEND = "numba"
    hamming_scan = hamming_scan_numba
    hamming_matrix = hamming_matrix_numba
    block_sgd = block_sgd_numba
else:
    BACKEND = "numpy"
    hamming_scan = hamming_scan_numpy
    hamming_matrix = hamming_matrix_numpy
    block_sgd = block_sgd_numpy

# BLAS gemv beats the numba loop, so the cosine baseline is never handicapped.
dot_scan = dot_scan_numpy


def set_threads(n):
    """Set the worker count used by the parallel numba kernels."""
    if n < 1:
        raise ValueError("thread count must be >= 1")
    if BACKEND == "numba":
        import numba

        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
