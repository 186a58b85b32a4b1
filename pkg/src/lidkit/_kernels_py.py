"""Pure-Python / numpy implementations of the hot kernels.

This is the fallback backend used when the compiled extension is not
available (see :mod:`lidkit.kernels`). Both backends implement the same
contracts and are individually deterministic; they are not guaranteed to
be bit-identical to each other because float summation order differs.
"""

from __future__ import annotations

import math

import numpy as np

BACKEND_NAME = "python"

_FNV_OFFSET = 2166136261
_FNV_PRIME = 16777619
_MASK32 = 0xFFFFFFFF


def fnv1a(data: bytes) -> int:
    """FNV-1a 32-bit hash over raw bytes."""
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & _MASK32
    return h


def token_ngram_hashes(token: str, minn: int, maxn: int, bucket: int) -> list[int]:
    """Bucket indices of all boundary-wrapped character n-grams of a token.

    Equivalent to hashing each n-gram string of ``"<" + token + ">"`` with
    :func:`fnv1a` over its UTF-8 bytes and reducing modulo ``bucket``.
    Order is shortest n first, then left to right.
    """
    if maxn <= 0:
        return []
    wrapped = "<" + token + ">"
    k = len(wrapped)
    out: list[int] = []
    for n in range(max(minn, 1), maxn + 1):
        if n > k:
            break
        for i in range(k - n + 1):
            out.append(fnv1a(wrapped[i : i + n].encode("utf-8")) % bucket)
    return out


def hidden_vector(input_matrix: np.ndarray, ids: np.ndarray, mean: bool = True) -> np.ndarray:
    """Pooled hidden vector for one feature-id list (float32).

    Rows are accumulated in float64 and divided by the feature count when
    mean pooling is on; no features yields the zero vector.
    """
    dim = input_matrix.shape[1]
    if len(ids) == 0:
        return np.zeros(dim, dtype=np.float32)
    acc = input_matrix[ids].sum(axis=0, dtype=np.float64)
    if mean:
        acc /= len(ids)
    return acc.astype(np.float32)


def scores(
    input_matrix: np.ndarray,
    output_matrix: np.ndarray,
    ids: np.ndarray,
    mean: bool = True,
) -> np.ndarray:
    """Softmax class probabilities (float64) for one feature-id list."""
    h = hidden_vector(input_matrix, ids, mean).astype(np.float64)
    z = output_matrix.astype(np.float64) @ h
    z -= z.max()
    e = np.exp(z)
    return e / e.sum()


def train_shard(
    input_matrix: np.ndarray,
    output_matrix: np.ndarray,
    ids_flat: np.ndarray,
    offsets: np.ndarray,
    labels: np.ndarray,
    order: np.ndarray,
    lr0: float,
    t0: int,
    t_total: int,
    mean: bool = True,
) -> float:
    """Run one SGD pass over ``order`` and return the summed loss.

    Per example: mean-pooled hidden vector, softmax, cross-entropy
    gradient, in-place float32 updates to the output rows and to every
    contributing input row (scaled by 1/feature-count under mean pooling).
    The learning rate decays linearly with the global step counter,
    ``lr0 * (1 - t/t_total)`` with ``t`` starting at ``t0``.
    """
    n_labels = output_matrix.shape[0]
    log_n_labels = math.log(n_labels)
    total = 0.0
    t = t0
    for ex in order:
        lr = lr0 * (1.0 - t / t_total)
        t += 1
        s, e = offsets[ex], offsets[ex + 1]
        cnt = e - s
        if cnt == 0:
            # zero hidden vector: uniform softmax, zero gradient
            total += log_n_labels
            continue
        ids = ids_flat[s:e]
        y = labels[ex]
        h = input_matrix[ids].sum(axis=0, dtype=np.float64)
        if mean:
            h /= cnt
        z = output_matrix.astype(np.float64) @ h
        z -= z.max()
        p = np.exp(z)
        p /= p.sum()
        total -= math.log(max(p[y], 1e-300))
        g = p
        g[y] -= 1.0
        # gradient w.r.t. the hidden vector, from the pre-update output rows
        gh = output_matrix.T.astype(np.float64) @ g
        output_matrix -= (lr * np.outer(g, h)).astype(np.float32)
        scale = lr / cnt if mean else lr
        np.subtract.at(input_matrix, ids, (scale * gh).astype(np.float32))
    return total
