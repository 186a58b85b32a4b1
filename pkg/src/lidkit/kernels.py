"""Backend selection for the hot kernels.

The compiled Cython extension is used when it is importable; otherwise the
numpy fallback takes over. Set ``LIDKIT_KERNELS=python`` (or ``cython``) to
force a backend, or call :func:`use` at runtime (the benchmark does this).

Both backends are deterministic run-to-run. Trained weights are *not*
guaranteed to be bit-identical across backends (float summation order
differs), only numerically close.
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _kernels_py

_cython_mod: ModuleType | None
try:
    from . import _kernels as _cython_mod  # type: ignore[attr-defined]
except ImportError:
    _cython_mod = None


def available_backends() -> list[str]:
    names = ["python"]
    if _cython_mod is not None:
        names.insert(0, "cython")
    return names


def _select_default() -> ModuleType:
    forced = os.environ.get("LIDKIT_KERNELS", "").strip().lower()
    if forced == "python":
        return _kernels_py
    if forced == "cython":
        if _cython_mod is None:
            raise ImportError(
                "LIDKIT_KERNELS=cython but the compiled extension is not available"
            )
        return _cython_mod
    return _cython_mod if _cython_mod is not None else _kernels_py


_impl: ModuleType = _select_default()


def use(name: str) -> None:
    """Switch the active backend ("python" or "cython")."""
    global _impl
    if name == "python":
        _impl = _kernels_py
    elif name == "cython":
        if _cython_mod is None:
            raise ValueError("compiled extension not available")
        _impl = _cython_mod
    else:
        raise ValueError(f"unknown backend {name!r}")


def backend() -> str:
    """Name of the active backend."""
    return _impl.BACKEND_NAME


def fnv1a(data: bytes) -> int:
    return _impl.fnv1a(data)


def token_ngram_hashes(token: str, minn: int, maxn: int, bucket: int) -> list[int]:
    return _impl.token_ngram_hashes(token, minn, maxn, bucket)


def hidden_vector(input_matrix, ids, mean=True):
    return _impl.hidden_vector(input_matrix, ids, mean)


def scores(input_matrix, output_matrix, ids, mean=True):
    return _impl.scores(input_matrix, output_matrix, ids, mean)


def train_shard(
    input_matrix, output_matrix, ids_flat, offsets, labels, order, lr0, t0, t_total, mean=True
):
    return _impl.train_shard(
        input_matrix, output_matrix, ids_flat, offsets, labels, order, lr0, t0, t_total, mean
    )
