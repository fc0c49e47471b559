"""First-order moments from local randomized projections.

The two measurement stages apply ``U (x) U`` (Haar unitary) and ``O (x) O``
(Haar orthogonal) and measure ``M (x) M`` and ``Mhat (x) Mhat``. Their Haar
averages ``R`` and ``Q`` determine ``tr(rho S)`` and ``tr(rho S^{T_B})``
and hence the fidelity with ``|phi+>``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateObservableError, DomainError, ShapeError
from .haar import orthogonal_twirl_coefficients, unitary_twirl_coefficients
from .states import StateModel

__all__ = [
    "ObservablePair",
    "GeneralCoefficients",
    "MomentSampleSet",
    "ProjectorSet",
    "rank_optimal",
    "expect_U",
    "expect_O",
    "exact_R",
    "exact_Q",
    "exact_R_general",
    "exact_Q_general",
    "fidelity_from_moments",
    "sn_from_fidelity",
    "general_coefficients",
    "fidelity_general",
    "projection_set",
    "projector_probabilities",
    "EPS_ROUND",
]

EPS_ROUND = 1e-9


@dataclass(frozen=True, eq=False)
class ObservablePair:
    """Local observables ``M`` (unitary stage) and ``Mhat`` (orthogonal stage).

    ``Mhat`` must be Hermitian and antisymmetric (``Mhat = -Mhat^T``), i.e.
    purely imaginary. ``j`` records the basis index of a rank-optimal ``M``;
    it is ``None`` for general pairs.
    """

    d: int
    M: np.ndarray
    Mhat: np.ndarray
    alpha: np.ndarray = field(repr=False)
    alpha_hat: np.ndarray = field(repr=False)
    j: int | None = None

    @classmethod
    def from_matrices(cls, M, Mhat, atol: float = 1e-12) -> "ObservablePair":
        M = np.asarray(M, dtype=complex)
        Mhat = np.asarray(Mhat, dtype=complex)
        d = M.shape[0]
        if M.shape != (d, d) or Mhat.shape != (d, d):
            raise ShapeError("observables must be square and of equal dimension")
        if np.abs(M - M.conj().T).max() > atol:
            raise DomainError("M must be Hermitian")
        if np.abs(Mhat - Mhat.conj().T).max() > atol or np.abs(Mhat + Mhat.T).max() > atol:
            raise DomainError("Mhat must be Hermitian with Mhat = -Mhat^T")
        return cls(d, M, Mhat, np.linalg.eigvalsh(M), np.linalg.eigvalsh(Mhat))

    @property
    def is_rank_optimal(self) -> bool:
        return self.j is not None

    def mhat_eigvecs(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvectors of ``Mhat`` for eigenvalues +1 and -1 (rank-optimal only)."""
        d = self.d
        lam1 = np.zeros(d, dtype=complex)
        lam2 = np.zeros(d, dtype=complex)
        lam1[0], lam1[d - 1] = 1 / math.sqrt(2), 1j / math.sqrt(2)
        lam2[0], lam2[d - 1] = 1 / math.sqrt(2), -1j / math.sqrt(2)
        return lam1, lam2


def rank_optimal(d: int, j: int = 0) -> ObservablePair:
    """``M = |j><j|`` and ``Mhat = -i|1><d| + i|d><1|`` (0-based: entries (0, d-1), (d-1, 0))."""
    if d < 2:
        raise DomainError("d must be >= 2")
    if not 0 <= j < d:
        raise DomainError(f"basis index j must lie in [0, {d}), got {j}")
    M = np.zeros((d, d), dtype=complex)
    M[j, j] = 1.0
    Mhat = np.zeros((d, d), dtype=complex)
    Mhat[0, d - 1] = -1j
    Mhat[d - 1, 0] = 1j
    alpha = np.zeros(d)
    alpha[-1] = 1.0
    alpha_hat = np.zeros(d)
    alpha_hat[0], alpha_hat[-1] = -1.0, 1.0
    return ObservablePair(d, M, Mhat, alpha, alpha_hat, j=j)


@dataclass(frozen=True)
class GeneralCoefficients:
    a1: float
    a2: float
    c1: float
    c2: float
    c3: float


def general_coefficients(obs: ObservablePair) -> GeneralCoefficients:
    """Twirl coefficients of ``M (x) M`` and ``Mhat (x) Mhat`` from the spectra.

    Uses ``tr(M (x) M) = (sum alpha)^2``, ``tr(S M (x) M) = sum alpha^2`` and,
    for antisymmetric ``Mhat``, ``tr(S^{T_B} Mhat (x) Mhat) = -sum alphahat^2``.
    """
    d = obs.d
    s1, s2 = float(np.sum(obs.alpha)), float(np.sum(obs.alpha**2))
    h1, h2 = float(np.sum(obs.alpha_hat)), float(np.sum(obs.alpha_hat**2))
    u = unitary_twirl_coefficients(s1 * s1, s2, d)
    o = orthogonal_twirl_coefficients(h1 * h1, h2, -h2, d)
    if abs(o.c3) < 1e-12:
        raise DegenerateObservableError("c3 vanishes; Mhat carries no fidelity information")
    return GeneralCoefficients(u.a1, u.a2, o.c1, o.c2, o.c3)


def fidelity_general(R, Q, coeffs: GeneralCoefficients, d: int):
    """Fidelity from moments measured with an arbitrary valid observable pair."""
    if abs(coeffs.c3) < 1e-12 or abs(coeffs.a2) < 1e-12:
        raise DegenerateObservableError("degenerate twirl coefficients")
    tr_swap = (R - coeffs.a1) / coeffs.a2
    return (Q - coeffs.c1 - coeffs.c2 * tr_swap) / (d * coeffs.c3)


def exact_R(rho: StateModel):
    d = rho.d
    return (1 + rho.trace_swap()) / (d * (d + 1))


def exact_Q(rho: StateModel):
    d = rho.d
    return 2 * (rho.trace_swap() - rho.trace_swap_tb()) / (d * (d - 1))


def exact_R_general(rho: StateModel, coeffs: GeneralCoefficients):
    return coeffs.a1 + coeffs.a2 * rho.trace_swap()


def exact_Q_general(rho: StateModel, coeffs: GeneralCoefficients):
    return coeffs.c1 + coeffs.c2 * rho.trace_swap() + coeffs.c3 * rho.trace_swap_tb()


def fidelity_from_moments(R, Q, d: int):
    """``(d+1) R - (d-1) Q/2 - 1/d``; exact when ``R`` and ``Q`` are Fractions."""
    return ((d + 1) * d * R - (d - 1) * d * Q / 2 - 1) / d


def sn_from_fidelity(F: float, d: int) -> int:
    """Certified Schmidt number ``ceil(d F)``, clamped to ``[1, d]``.

    The ceiling is taken of ``d F - 1e-9`` so rounding noise at exact
    multiples of ``1/d`` cannot inflate the bound.
    """
    if not F > 0:
        return 1
    return int(min(d, max(1, math.ceil(d * F - EPS_ROUND))))


@dataclass(frozen=True)
class ProjectorSet:
    """Kets of the five product projectors per ``(U, O)`` pair.

    ``P1 = e1 (x) e1``, ``P2 = e2 (x) e2``, ``P3 = e2 (x) e3``,
    ``P4 = e3 (x) e3``, ``P5 = e3 (x) e2``, with ``E_U = p1`` and
    ``E_O = p2 - p3 + p4 - p5``. Arrays carry any leading batch axes.
    """

    e1: np.ndarray
    e2: np.ndarray
    e3: np.ndarray

    def pairs(self) -> list[tuple[np.ndarray, np.ndarray]]:
        e1, e2, e3 = self.e1, self.e2, self.e3
        return [(e1, e1), (e2, e2), (e2, e3), (e3, e3), (e3, e2)]

    def operators(self) -> list[np.ndarray]:
        """Dense projectors, for small ``d`` checks (unbatched only)."""
        out = []
        for a, b in self.pairs():
            v = np.kron(a, b)
            out.append(np.outer(v, v.conj()))
        return out


def _check_rank_optimal(obs):
    if not obs.is_rank_optimal:
        raise DomainError("projector decomposition needs the rank-optimal observables")


def projection_set(U, O, obs: ObservablePair) -> ProjectorSet:
    _check_rank_optimal(obs)
    U = np.asarray(U)
    O = np.asarray(O)
    lam1, lam2 = obs.mhat_eigvecs()
    return ProjectorSet(U[..., :, obs.j], O @ lam1, O @ lam2)


def projector_probabilities(rho: StateModel, U, O, obs: ObservablePair) -> np.ndarray:
    """Exact probabilities of the five projectors, shape ``(..., 5)``."""
    ps = projection_set(U, O, obs)
    return np.stack([rho.product_probs(a, b) for a, b in ps.pairs()], axis=-1)


def _check_unitary_shape(X, d, name):
    X = np.asarray(X)
    if X.shape[-2:] != (d, d):
        raise ShapeError(f"{name} must be {d}x{d}, got {X.shape[-2:]}")
    return X


def expect_U(rho: StateModel, U, obs: ObservablePair):
    """``tr[rho U^{(x)2} (M (x) M) U^{dag (x)2}]``; batched over leading axes of ``U``."""
    U = _check_unitary_shape(U, rho.d, "U")
    if obs.is_rank_optimal:
        e = U[..., :, obs.j]
        return rho.product_probs(e, e)
    return _expect_conjugated(rho, U, obs.M)


def expect_O(rho: StateModel, O, obs: ObservablePair):
    """``tr[rho O^{(x)2} (Mhat (x) Mhat) O^{T (x)2}]``; batched over leading axes of ``O``."""
    O = _check_unitary_shape(O, rho.d, "O")
    if np.iscomplexobj(O) and np.abs(np.imag(O)).max() > 0:
        raise DomainError("O must be a real orthogonal matrix")
    O = np.real(O)
    if obs.is_rank_optimal:
        p2, p3, p4, p5 = _orth_probs(rho, O, obs)
        return p2 - p3 + p4 - p5
    return _expect_conjugated(rho, O, obs.Mhat)


def _orth_probs(rho, O, obs):
    lam1, lam2 = obs.mhat_eigvecs()
    e2, e3 = O @ lam1, O @ lam2
    return (rho.product_probs(e2, e2), rho.product_probs(e2, e3),
            rho.product_probs(e3, e3), rho.product_probs(e3, e2))


def _expect_conjugated(rho, X, A):
    X = np.asarray(X)
    if X.ndim == 2:
        B = X @ A @ X.conj().T
        return float(np.real(rho.expect_local(B, B)))
    return np.array([_expect_conjugated(rho, x, A) for x in X])


@dataclass(frozen=True)
class MomentSampleSet:
    """Paired per-operation expectation values ``E_U^(l)``, ``E_O^(l)``.

    ``provenance`` is ``"exact"`` or ``"shots:<M>"``.
    """

    d: int
    E_U: np.ndarray
    E_O: np.ndarray
    provenance: str = "exact"

    CSV_COLUMNS = ("index", "E_U", "E_O", "provenance")

    def __post_init__(self):
        if len(self.E_U) != len(self.E_O):
            raise ShapeError("E_U and E_O must have equal length")

    @property
    def N(self) -> int:
        return len(self.E_U)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.CSV_COLUMNS)
            for i, (u, o) in enumerate(zip(self.E_U, self.E_O)):
                w.writerow([i, repr(float(u)), repr(float(o)), self.provenance])

    @classmethod
    def from_csv(cls, path, d: int) -> "MomentSampleSet":
        path = Path(path)
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(row for row in fh if not row.startswith("#")))
        if not rows:
            raise ShapeError(f"{path}: no samples")
        missing = set(cls.CSV_COLUMNS) - set(rows[0])
        if missing:
            raise ShapeError(f"{path}: missing columns {sorted(missing)}")
        rows.sort(key=lambda r: int(r["index"]))
        provs = {r["provenance"] for r in rows}
        prov = provs.pop() if len(provs) == 1 else "mixed"
        return cls(
            d,
            np.array([float(r["E_U"]) for r in rows]),
            np.array([float(r["E_O"]) for r in rows]),
            prov,
        )
