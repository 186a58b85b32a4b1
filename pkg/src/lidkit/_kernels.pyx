# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: FNV-1a hashing, n-gram hashing, scoring and the
SGD inner loop. Mirrors the contracts of ``_kernels_py``; the training
loop releases the GIL so threads can run hogwild-style on shared matrices.
"""

from libc.math cimport exp, log, INFINITY
from libc.stdlib cimport free, malloc

import numpy as np

cimport numpy as cnp

BACKEND_NAME = "cython"


cdef inline unsigned int _fnv1a_raw(const unsigned char *data, Py_ssize_t n) nogil:
    cdef unsigned int h = 2166136261u
    cdef Py_ssize_t i
    for i in range(n):
        h = (h ^ <unsigned int>data[i]) * 16777619u
    return h


def fnv1a(data: bytes) -> int:
    """FNV-1a 32-bit hash over raw bytes."""
    cdef const char *p = data
    return _fnv1a_raw(<const unsigned char *>p, len(data))


def token_ngram_hashes(str token, int minn, int maxn, long long bucket):
    """Bucket indices of all boundary-wrapped character n-grams of a token.

    N-grams are windows of code points of the wrapped token, hashed over
    their UTF-8 bytes; order is shortest n first, then left to right.
    """
    out = []
    if maxn <= 0:
        return out
    wrapped = "<" + token + ">"
    data = wrapped.encode("utf-8")
    cdef const char *raw = data
    cdef const unsigned char *buf = <const unsigned char *>raw
    cdef Py_ssize_t nbytes = len(data)
    cdef Py_ssize_t k = len(wrapped)
    offs = np.empty(k + 1, dtype=np.int64)
    cdef long long[::1] off = offs
    cdef Py_ssize_t i = 0, cp = 0
    while i < nbytes:
        if (buf[i] & 0xC0) != 0x80:  # ASCII or UTF-8 lead byte
            off[cp] = i
            cp += 1
        i += 1
    off[k] = nbytes
    cdef int n
    cdef Py_ssize_t s
    cdef unsigned long long h
    cdef int lo = minn if minn > 1 else 1
    for n in range(lo, maxn + 1):
        if n > k:
            break
        for s in range(k - n + 1):
            h = _fnv1a_raw(buf + off[s], off[s + n] - off[s])
            out.append(<long long>(h % <unsigned long long>bucket))
    return out


def hidden_vector(float[:, ::1] input_matrix, int[::1] ids, bint mean=True):
    """Pooled hidden vector for one feature-id list (float32)."""
    cdef Py_ssize_t dim = input_matrix.shape[1]
    cdef Py_ssize_t m = ids.shape[0]
    acc = np.zeros(dim, dtype=np.float64)
    cdef double[::1] a = acc
    cdef Py_ssize_t j, d
    cdef int r
    for j in range(m):
        r = ids[j]
        for d in range(dim):
            a[d] += input_matrix[r, d]
    if mean and m > 0:
        for d in range(dim):
            a[d] /= m
    return acc.astype(np.float32)


def scores(float[:, ::1] input_matrix, float[:, ::1] output_matrix, int[::1] ids, bint mean=True):
    """Softmax class probabilities (float64) for one feature-id list."""
    cdef Py_ssize_t dim = input_matrix.shape[1]
    cdef Py_ssize_t n_labels = output_matrix.shape[0]
    cdef Py_ssize_t m = ids.shape[0]
    h32 = hidden_vector(input_matrix, ids, mean)
    cdef float[::1] h = h32
    probs = np.empty(n_labels, dtype=np.float64)
    cdef double[::1] p = probs
    cdef Py_ssize_t l, d
    cdef double z, zmax = -INFINITY, zsum = 0.0
    for l in range(n_labels):
        z = 0.0
        for d in range(dim):
            z += <double>output_matrix[l, d] * <double>h[d]
        p[l] = z
        if z > zmax:
            zmax = z
    for l in range(n_labels):
        p[l] = exp(p[l] - zmax)
        zsum += p[l]
    for l in range(n_labels):
        p[l] /= zsum
    return probs


def train_shard(
    float[:, ::1] input_matrix,
    float[:, ::1] output_matrix,
    int[::1] ids_flat,
    long long[::1] offsets,
    int[::1] labels,
    long long[::1] order,
    double lr0,
    long long t0,
    long long t_total,
    bint mean=True,
):
    """Run one SGD pass over ``order`` and return the summed loss.

    Same update rule and ordering as the fallback backend: hidden vector
    and gradients in float64, deltas rounded to float32 before the
    in-place update, output rows updated before input rows, learning rate
    decaying linearly with the global step counter.
    """
    cdef Py_ssize_t dim = input_matrix.shape[1]
    cdef Py_ssize_t n_labels = output_matrix.shape[0]
    cdef Py_ssize_t n_order = order.shape[0]
    cdef double *h = <double *>malloc(dim * sizeof(double))
    cdef double *g = <double *>malloc(n_labels * sizeof(double))
    cdef double *gh = <double *>malloc(dim * sizeof(double))
    if h == NULL or g == NULL or gh == NULL:
        free(h)
        free(g)
        free(gh)
        raise MemoryError()

    cdef double total = 0.0, lr, z, zmax, zsum, gl, scale
    cdef double log_n_labels = log(<double>n_labels)
    cdef long long t = t0, ex, s, e, cnt
    cdef Py_ssize_t oi, j, d, l
    cdef int r, y
    with nogil:
        for oi in range(n_order):
            ex = order[oi]
            lr = lr0 * (1.0 - <double>t / <double>t_total)
            t += 1
            s = offsets[ex]
            e = offsets[ex + 1]
            cnt = e - s
            if cnt == 0:
                total += log_n_labels
                continue
            for d in range(dim):
                h[d] = 0.0
            for j in range(s, e):
                r = ids_flat[j]
                for d in range(dim):
                    h[d] += input_matrix[r, d]
            if mean:
                for d in range(dim):
                    h[d] /= cnt
            zmax = -INFINITY
            for l in range(n_labels):
                z = 0.0
                for d in range(dim):
                    z += <double>output_matrix[l, d] * h[d]
                g[l] = z
                if z > zmax:
                    zmax = z
            zsum = 0.0
            for l in range(n_labels):
                g[l] = exp(g[l] - zmax)
                zsum += g[l]
            for l in range(n_labels):
                g[l] /= zsum
            y = labels[ex]
            total -= log(g[y] if g[y] > 1e-300 else 1e-300)
            g[y] -= 1.0
            # gradient w.r.t. the hidden vector, from the pre-update output rows
            for d in range(dim):
                z = 0.0
                for l in range(n_labels):
                    z += <double>output_matrix[l, d] * g[l]
                gh[d] = z
            for l in range(n_labels):
                gl = lr * g[l]
                for d in range(dim):
                    output_matrix[l, d] -= <float>(gl * h[d])
            scale = (lr / cnt) if mean else lr
            for d in range(dim):
                gh[d] *= scale
            for j in range(s, e):
                r = ids_flat[j]
                for d in range(dim):
                    input_matrix[r, d] -= <float>gh[d]
    free(h)
    free(g)
    free(gh)
    return total
