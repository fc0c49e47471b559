"""Dense complex linear algebra on bipartite ``d x d`` systems.

Operators on :math:`\\mathbb{C}^d \\otimes \\mathbb{C}^d` are plain ``numpy``
arrays of shape ``(d*d, d*d)`` with row-major index ``i*d + j`` for the
product ket ``|i>|j>``. Indices are 0-based: the ket written ``|k>`` with
``k = 1..d`` in physics notation is ``basis(d, k - 1)`` here.
"""

from __future__ import annotations

import contextlib

import numpy as np

from .errors import ResourceError, ShapeError

__all__ = [
    "DEFAULT_MEMORY_CAP",
    "memory_cap",
    "get_memory_cap",
    "check_alloc",
    "basis",
    "kron",
    "swap_operator",
    "partial_transpose_B",
    "partial_trace",
    "max_entangled_ket",
    "is_hermitian",
    "dag",
]

DEFAULT_MEMORY_CAP = 2 * 1024**3

_memory_cap = DEFAULT_MEMORY_CAP


def get_memory_cap() -> int:
    return _memory_cap


@contextlib.contextmanager
def memory_cap(nbytes: int):
    """Temporarily change the allocation limit used by :func:`check_alloc`."""
    global _memory_cap
    old = _memory_cap
    _memory_cap = int(nbytes)
    try:
        yield
    finally:
        _memory_cap = old


def check_alloc(shape, dtype=np.complex128) -> None:
    """Raise :class:`ResourceError` if an array of ``shape`` would exceed the cap."""
    nbytes = int(np.prod([int(s) for s in shape], dtype=object)) * np.dtype(dtype).itemsize
    if nbytes > _memory_cap:
        raise ResourceError(
            f"refusing to allocate {nbytes} bytes for shape {tuple(shape)} "
            f"(cap is {_memory_cap} bytes)"
        )


def dag(A: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(A, -1, -2))


def basis(d: int, k: int) -> np.ndarray:
    e = np.zeros(d, dtype=complex)
    e[k] = 1.0
    return e


def is_hermitian(A: np.ndarray, atol: float = 1e-12) -> bool:
    A = np.asarray(A)
    return A.ndim == 2 and A.shape[0] == A.shape[1] and np.abs(A - dag(A)).max() < atol


def kron(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Kronecker product ``A (x) B`` subject to the memory cap."""
    A = np.asarray(A)
    B = np.asarray(B)
    if A.ndim != 2 or B.ndim != 2:
        raise ShapeError("kron expects two matrices")
    shape = (A.shape[0] * B.shape[0], A.shape[1] * B.shape[1])
    check_alloc(shape, np.result_type(A, B, np.complex128))
    return np.kron(A, B).astype(complex, copy=False)


def swap_operator(d: int) -> np.ndarray:
    """The SWAP permutation ``sum_{jk} |jk><kj|`` on ``C^d (x) C^d``."""
    check_alloc((d * d, d * d))
    S = np.zeros((d, d, d, d), dtype=complex)
    j, k = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
    S[j, k, k, j] = 1.0
    return S.reshape(d * d, d * d)


def _as_tensor(A: np.ndarray, d: int) -> np.ndarray:
    A = np.asarray(A)
    if A.shape != (d * d, d * d):
        raise ShapeError(f"expected a ({d*d}, {d*d}) operator, got {A.shape}")
    return A.reshape(d, d, d, d)


def partial_transpose_B(A: np.ndarray, d: int) -> np.ndarray:
    """Transpose the second tensor factor of a ``d^2 x d^2`` operator."""
    return _as_tensor(A, d).transpose(0, 3, 2, 1).reshape(d * d, d * d).copy()


def partial_trace(A: np.ndarray, d: int, subsystem: str = "B") -> np.ndarray:
    """Trace out ``subsystem`` (``"A"`` or ``"B"``), returning a ``d x d`` operator."""
    T = _as_tensor(A, d)
    if subsystem == "B":
        return np.einsum("ijkj->ik", T)
    if subsystem == "A":
        return np.einsum("ijil->jl", T)
    raise ValueError(f"subsystem must be 'A' or 'B', got {subsystem!r}")


def max_entangled_ket(d: int) -> np.ndarray:
    """``|phi_d^+> = d^{-1/2} sum_j |jj>`` as a length ``d^2`` vector."""
    v = np.zeros(d * d, dtype=complex)
    v[np.arange(d) * (d + 1)] = 1.0 / np.sqrt(d)
    return v
