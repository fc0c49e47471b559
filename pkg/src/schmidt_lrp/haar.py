"""Seeded Haar sampling on U(d) and O(d), and the analytic second-moment twirls.

Random numbers come from :class:`numpy.random.Philox`, a counter-based
generator keyed by ``(seed, stream_id)``. Every ``(seed, stream_id)`` pair
is an independent substream, so trials can be evaluated in any order (or
in parallel) without changing their draws.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .matlin import partial_transpose_B, swap_operator

__all__ = [
    "RandomStream",
    "stream_id",
    "sample_haar_unitary",
    "sample_haar_orthogonal",
    "TwirlCoefficients",
    "unitary_twirl_coefficients",
    "orthogonal_twirl_coefficients",
    "twirl_unitary_analytic",
    "twirl_orthogonal_analytic",
]

_MASK64 = (1 << 64) - 1


def stream_id(*parts) -> int:
    """Stable 64-bit id for a tuple of labels (ints or strings)."""
    h = hashlib.blake2b(repr(tuple(parts)).encode(), digest_size=8)
    return int.from_bytes(h.digest(), "little")


@dataclass(frozen=True)
class RandomStream:
    """A reproducible random substream.

    ``generator()`` always starts from the beginning of the substream, so two
    calls return generators producing identical sequences.
    """

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        key = np.array([self.seed & _MASK64, self.stream_id & _MASK64], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def child(self, *parts) -> "RandomStream":
        return RandomStream(self.seed, stream_id(self.stream_id, *parts))


def _rng(rs) -> np.random.Generator:
    if isinstance(rs, np.random.Generator):
        return rs
    return rs.generator()


def _check_dim(d):
    if d < 2:
        raise DomainError(f"dimension must be >= 2, got {d}")


def _qr_haar(sample, d, size):
    shape = (d, d) if size is None else (size, d, d)
    while True:
        Z = sample(shape)
        Q, R = np.linalg.qr(Z)
        diag = np.diagonal(R, axis1=-2, axis2=-1)
        if np.all(np.abs(diag) > 0):
            break
    return Q * (diag / np.abs(diag))[..., None, :]


def sample_haar_unitary(d: int, rs, size: int | None = None) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix.

    Parameters
    ----------
    d : int
        Matrix dimension, at least 2.
    rs : RandomStream or numpy.random.Generator
        Source of randomness. A :class:`RandomStream` restarts its substream.
    size : int, optional
        If given, return a stack of shape ``(size, d, d)``.
    """
    _check_dim(d)
    rng = _rng(rs)

    def ginibre(shape):
        return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)

    return _qr_haar(ginibre, d, size)


def sample_haar_orthogonal(d: int, rs, size: int | None = None) -> np.ndarray:
    """Haar-random real orthogonal matrix via QR of a real Ginibre matrix."""
    _check_dim(d)
    rng = _rng(rs)
    return _qr_haar(rng.standard_normal, d, size)


@dataclass(frozen=True)
class TwirlCoefficients:
    """Coefficients of the group-averaged operator.

    Unitary twirl: ``a1 I + a2 S``. Orthogonal twirl: ``c1 I + c2 S + c3 S^{T_B}``.
    Unused fields are zero.
    """

    a1: float = 0.0
    a2: float = 0.0
    c1: float = 0.0
    c2: float = 0.0
    c3: float = 0.0


def _traces(A, d):
    S = swap_operator(d)
    tA = np.trace(A)
    tSA = np.trace(S @ A)
    tSTA = np.trace(partial_transpose_B(S, d) @ A)
    return tA, tSA, tSTA


def unitary_twirl_coefficients(trA, trSA, d: int) -> TwirlCoefficients:
    _check_dim(d)
    a1 = (trA - trSA / d) / (d * d - 1)
    a2 = (trSA - trA / d) / (d * d - 1)
    return TwirlCoefficients(a1=a1, a2=a2)


def orthogonal_twirl_coefficients(trA, trSA, trSTA, d: int) -> TwirlCoefficients:
    _check_dim(d)
    den = d * (d - 1) * (d + 2)
    c1 = ((d + 1) * trA - trSA - trSTA) / den
    c2 = (-trA + (d + 1) * trSA - trSTA) / den
    c3 = (-trA - trSA + (d + 1) * trSTA) / den
    return TwirlCoefficients(c1=c1, c2=c2, c3=c3)


def twirl_unitary_analytic(A: np.ndarray, d: int) -> np.ndarray:
    """``int dU U^{(x)2} A U^{dag (x)2}`` in closed form."""
    _check_dim(d)
    tA, tSA, _ = _traces(A, d)
    c = unitary_twirl_coefficients(tA, tSA, d)
    return c.a1 * np.eye(d * d) + c.a2 * swap_operator(d)


def twirl_orthogonal_analytic(A: np.ndarray, d: int) -> np.ndarray:
    """``int dO O^{(x)2} A O^{T (x)2}`` in closed form."""
    _check_dim(d)
    tA, tSA, tSTA = _traces(A, d)
    c = orthogonal_twirl_coefficients(tA, tSA, tSTA, d)
    S = swap_operator(d)
    return c.c1 * np.eye(d * d) + c.c2 * S + c.c3 * partial_transpose_B(S, d)
