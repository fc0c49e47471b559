"""Bipartite ``d x d`` state families.

A :class:`StateModel` is either a dense ``d^2 x d^2`` density matrix or the
structured form ``sum_k w_k |psi_k><psi_k| + c * I``. The structured form
keeps every quantity the pipeline needs (product-projector probabilities,
``tr(rho S)``, ``tr(rho S^{T_B})``, purities) at ``O(rank * d^2)`` cost,
which is what makes ``d = 80`` sweeps feasible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeError
from .haar import _rng
from .matlin import check_alloc, max_entangled_ket, partial_trace

__all__ = [
    "StateModel",
    "max_entangled",
    "isotropic",
    "partial_entangled",
    "thermal",
    "random_hs_density",
    "random_noise_state",
    "fidelity_direct",
    "sn_exact_isotropic",
]


def _frozen(a):
    a = np.array(a, dtype=complex)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class StateModel:
    """Density operator on ``C^d (x) C^d``.

    Build with :meth:`from_dense` or :meth:`low_rank`; use the factory
    functions in this module for the named families.
    """

    d: int
    dense: np.ndarray | None = None
    weights: np.ndarray | None = None
    kets: np.ndarray | None = None
    identity_coef: float = 0.0

    @classmethod
    def from_dense(cls, rho, d: int) -> "StateModel":
        rho = np.asarray(rho)
        if rho.shape != (d * d, d * d):
            raise ShapeError(f"expected ({d*d}, {d*d}) density matrix, got {rho.shape}")
        return cls(d=d, dense=_frozen(rho))

    @classmethod
    def low_rank(cls, d: int, weights, kets, identity_coef: float = 0.0) -> "StateModel":
        kets = np.atleast_2d(np.asarray(kets, dtype=complex))
        weights = np.atleast_1d(np.asarray(weights, dtype=float))
        if kets.shape[1] != d * d or kets.shape[0] != weights.shape[0]:
            raise ShapeError("kets must have shape (rank, d^2) matching weights")
        w = weights.copy()
        w.flags.writeable = False
        return cls(d=d, weights=w, kets=_frozen(kets), identity_coef=float(identity_coef))

    @property
    def is_structured(self) -> bool:
        return self.dense is None

    @property
    def _psi(self) -> np.ndarray:
        # kets reshaped to (rank, d, d) coefficient matrices Psi_ij = <ij|psi>
        return self.kets.reshape(-1, self.d, self.d)

    @property
    def _rho4(self) -> np.ndarray:
        d = self.d
        return self.dense.reshape(d, d, d, d)

    def to_dense(self) -> np.ndarray:
        if not self.is_structured:
            return np.array(self.dense)
        n = self.d * self.d
        check_alloc((n, n))
        rho = self.identity_coef * np.eye(n, dtype=complex)
        rho += np.einsum("k,ki,kj->ij", self.weights, self.kets, self.kets.conj())
        return rho

    def trace(self) -> float:
        if not self.is_structured:
            return float(np.trace(self.dense).real)
        norms = np.sum(np.abs(self.kets) ** 2, axis=1)
        return float(self.weights @ norms + self.identity_coef * self.d**2)

    def product_probs(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """``<a (x) b| rho |a (x) b>`` for kets ``a``, ``b`` (batched over leading axes)."""
        a = np.asarray(a)
        b = np.asarray(b)
        if self.is_structured:
            amp = np.einsum("...i,rij,...j->...r", a.conj(), self._psi, b.conj())
            p = np.abs(amp) ** 2 @ self.weights
            na = np.sum(np.abs(a) ** 2, axis=-1)
            nb = np.sum(np.abs(b) ** 2, axis=-1)
            return p + self.identity_coef * na * nb
        v = np.einsum("...i,...j->...ij", a, b).reshape(*a.shape[:-1], self.d**2)
        return np.einsum("...i,ij,...j->...", v.conj(), self.dense, v, optimize=True).real

    def expect_local(self, A: np.ndarray, B: np.ndarray) -> complex:
        """``tr[rho (A (x) B)]`` for ``d x d`` operators ``A`` and ``B``."""
        if self.is_structured:
            val = np.einsum("k,kij,kij->", self.weights, self._psi.conj(), A @ self._psi @ B.T)
            return val + self.identity_coef * np.trace(A) * np.trace(B)
        return np.einsum("ijkl,ki,lj->", self._rho4, A, B)

    def trace_swap(self) -> float:
        """``tr(rho S)``."""
        if self.is_structured:
            psi = self._psi
            val = np.einsum("k,kij,kji->", self.weights, psi.conj(), psi)
            return float(val.real + self.identity_coef * self.d)
        return float(np.einsum("ijji->", self._rho4).real)

    def trace_swap_tb(self) -> float:
        """``tr(rho S^{T_B}) = d <phi+|rho|phi+>``."""
        if self.is_structured:
            tr_psi = np.trace(self._psi, axis1=1, axis2=2)
            return float(self.weights @ np.abs(tr_psi) ** 2 + self.identity_coef * self.d)
        return float(np.einsum("iijj->", self._rho4).real)

    def purity(self) -> float:
        if self.is_structured:
            w, K, c = self.weights, self.kets, self.identity_coef
            G = K.conj() @ K.T
            norms = np.real(np.diag(G))
            return float(w @ (np.abs(G) ** 2) @ w + 2 * c * (w @ norms) + c * c * self.d**2)
        return float(np.real(np.vdot(self.dense, self.dense)))

    def reduced(self, subsystem: str = "B") -> np.ndarray:
        """Reduced ``d x d`` operator after tracing out ``subsystem``."""
        if not self.is_structured:
            return partial_trace(self.dense, self.d, subsystem)
        psi = self._psi
        if subsystem == "B":
            red = np.einsum("k,kij,klj->il", self.weights, psi, psi.conj())
        elif subsystem == "A":
            red = np.einsum("k,kji,kjl->il", self.weights, psi, psi.conj())
        else:
            raise ValueError(f"subsystem must be 'A' or 'B', got {subsystem!r}")
        return red + self.identity_coef * self.d * np.eye(self.d)

    def reduced_purity(self, subsystem: str = "A") -> float:
        # tracing out B leaves rho_A
        r = self.reduced("B" if subsystem == "A" else "A")
        return float(np.real(np.vdot(r, r)))


def _check_v(v):
    if not 0.0 <= v <= 1.0:
        raise DomainError(f"visibility must lie in [0, 1], got {v}")


def max_entangled(d: int) -> StateModel:
    if d < 2:
        raise DomainError("d must be >= 2")
    return StateModel.low_rank(d, [1.0], [max_entangled_ket(d)])


def isotropic(d: int, v: float) -> StateModel:
    """``v |phi+><phi+| + (1 - v)/d^2 * I``."""
    _check_v(v)
    return StateModel.low_rank(d, [v], [max_entangled_ket(d)], (1.0 - v) / d**2)


def partial_entangled(d: int, mu: int) -> StateModel:
    """``mu^{-1/2} sum_{j<mu} |jj>``: Schmidt rank ``mu`` with flat coefficients."""
    if not 1 <= mu <= d:
        raise DomainError(f"Schmidt rank must lie in [1, {d}], got {mu}")
    ket = np.zeros(d * d, dtype=complex)
    ket[np.arange(mu) * (d + 1)] = 1.0 / math.sqrt(mu)
    return StateModel.low_rank(d, [1.0], [ket])


def thermal(d: int, v: float, beta: float) -> StateModel:
    """Purified thermal state mixed with white noise.

    ``v |psi><psi| + (1 - v)/d^2 * I`` with ``|psi> propto sum_j e^{-beta j} |jj>``,
    normalized to unit length.
    """
    _check_v(v)
    j = np.arange(1, d + 1)
    # shift exponent so large beta does not underflow
    amp = np.exp(-beta * (j - 1.0))
    amp /= np.linalg.norm(amp)
    ket = np.zeros(d * d, dtype=complex)
    ket[np.arange(d) * (d + 1)] = amp
    return StateModel.low_rank(d, [v], [ket], (1.0 - v) / d**2)


def random_hs_density(d_total: int, rs) -> np.ndarray:
    """Hilbert-Schmidt random density matrix ``G G^dag / tr(G G^dag)``."""
    if d_total < 2:
        raise DomainError("d_total must be >= 2")
    check_alloc((d_total, d_total))
    rng = _rng(rs)
    G = rng.standard_normal((d_total, d_total)) + 1j * rng.standard_normal((d_total, d_total))
    rho = G @ G.conj().T
    rho = (rho + rho.conj().T) / 2
    return rho / np.trace(rho).real


def random_noise_state(d: int, v: float, rs) -> StateModel:
    """``v |phi+><phi+| + (1 - v) sigma`` with ``sigma`` Hilbert-Schmidt random on ``C^{d^2}``."""
    _check_v(v)
    sigma = random_hs_density(d * d, rs)
    phi = max_entangled_ket(d)
    return StateModel.from_dense(v * np.outer(phi, phi.conj()) + (1 - v) * sigma, d)


def fidelity_direct(rho: StateModel) -> float:
    """``<phi+|rho|phi+>`` without building the projector."""
    return rho.trace_swap_tb() / rho.d


def sn_exact_isotropic(d: int, v: float) -> int:
    """Exact Schmidt number of the isotropic state: ``mu + 1`` iff ``v > (mu d - 1)/(d^2 - 1)``."""
    _check_v(v)
    sn = 1
    for mu in range(1, d):
        if v > (mu * d - 1) / (d * d - 1):
            sn = mu + 1
    return sn
