"""Comparison criteria: three mutually unbiased bases, second moments, trace distance."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .moments import EPS_ROUND, fidelity_from_moments
from .states import StateModel

__all__ = [
    "MubTriple",
    "CriterionResult",
    "build_3mubs",
    "s3d_statistic",
    "sn_from_3mubs",
    "mub_criterion",
    "correlation_norm_sq",
    "purity_gap",
    "second_moment_reference",
    "sn_from_second_moment",
    "second_moment_criterion",
    "trace_distance_lower_bound",
]


@dataclass(frozen=True, eq=False)
class MubTriple:
    """Three bases of ``C^d``; ``bases[z, a]`` is the ket ``|e_a^{z+1}>``.

    ``valid`` is False when the construction failed the orthonormality or
    unbiasedness check; ``max_deviation`` is the worst violation found.
    """

    d: int
    alpha: int
    bases: np.ndarray
    valid: bool
    max_deviation: float
    convention: str


@dataclass(frozen=True)
class CriterionResult:
    name: str
    statistic: float
    sn_bound: int
    projection_count: int


def _mub_deviation(bases, d):
    dev = 0.0
    eye = np.eye(d)
    for z in range(3):
        G = bases[z].conj() @ bases[z].T
        dev = max(dev, float(np.abs(G - eye).max()))
    for z in range(3):
        for w in range(z + 1, 3):
            ov = np.abs(bases[z].conj() @ bases[w].T) ** 2
            dev = max(dev, float(np.abs(ov - 1 / d).max()))
    return dev


def build_3mubs(d: int, alpha: int = 1, convention: str = "standard") -> MubTriple:
    """Computational basis plus two quadratic-phase bases.

    ``|e_a^2> = d^{-1/2} sum_{j=1}^d exp(2 pi i (alpha j^2/(2d) + a j/d)) |j>`` and
    ``|e_a^3>`` the same with ``alpha -> alpha + d - 1``. With
    ``convention="printed"`` the linear term is ``a j/(2d)``, which is not
    orthonormal; such a construction comes back with ``valid=False``.
    """
    if d < 2:
        raise DomainError("d must be >= 2")
    if convention == "standard":
        lin_den = d
    elif convention == "printed":
        lin_den = 2 * d
    else:
        raise DomainError(f"unknown MUB convention {convention!r}")
    j = np.arange(1, d + 1)
    a = np.arange(d)[:, None]

    def phase_basis(c):
        # reduce the quadratic exponent mod 2d before scaling to keep phases exact
        quad = (c * j * j) % (2 * d) / (2 * d)
        return np.exp(2j * np.pi * (quad + a * j / lin_den)) / math.sqrt(d)

    bases = np.stack([np.eye(d, dtype=complex), phase_basis(alpha), phase_basis(alpha + d - 1)])
    dev = _mub_deviation(bases, d)
    valid = dev < 1e-8
    bases.flags.writeable = False
    return MubTriple(d, alpha, bases, valid, dev, convention)


def s3d_statistic(rho: StateModel, mubs: MubTriple) -> float:
    """``sum_z sum_a <e_a^z, e_a^z*| rho |e_a^z, e_a^z*>``."""
    kets = mubs.bases.reshape(-1, mubs.d)
    return float(np.sum(rho.product_probs(kets, kets.conj())))


def sn_from_3mubs(S: float, d: int) -> int:
    """Smallest ``mu`` consistent with ``S <= 1 + 2 mu / d``, clamped to ``[1, d]``."""
    x = d * (S - 1) / 2
    return int(min(d, max(1, math.ceil(x - EPS_ROUND))))


def mub_criterion(rho: StateModel, mubs: MubTriple | None = None) -> CriterionResult:
    mubs = mubs or build_3mubs(rho.d)
    S = s3d_statistic(rho, mubs)
    return CriterionResult("3-MUBs", S, sn_from_3mubs(S, rho.d), 3 * rho.d)


def correlation_norm_sq(rho: StateModel) -> float:
    """``||T||^2 = d^2 tr(rho^2) - d tr(rho_A^2) - d tr(rho_B^2) + 1``."""
    d = rho.d
    return d * d * rho.purity() - d * rho.reduced_purity("A") - d * rho.reduced_purity("B") + 1


def purity_gap(rho: StateModel) -> float:
    """``tr(rho^2) - min(tr rho_A^2, tr rho_B^2)``; positive only for entangled states."""
    return rho.purity() - min(rho.reduced_purity("A"), rho.reduced_purity("B"))


def second_moment_reference(d: int, mu: int, statistic: str = "purity") -> float:
    """Value of the ladder statistic on ``|phi_+^mu>``."""
    if statistic == "purity":
        return 1 - 1 / mu
    if statistic == "correlation":
        return d * d + 1 - 2 * d / mu
    raise DomainError(f"unknown second-moment statistic {statistic!r}")


def _second_moment_value(rho, statistic):
    if statistic == "purity":
        return purity_gap(rho)
    if statistic == "correlation":
        return correlation_norm_sq(rho)
    raise DomainError(f"unknown second-moment statistic {statistic!r}")


def sn_from_second_moment(rho: StateModel, statistic: str = "purity") -> int:
    """Compare a purity-based statistic with the ``|phi_+^mu>`` reference ladder.

    Returns the smallest ``mu`` whose reference is not exceeded; a value
    above the ``mu = d - 1`` reference yields ``d``. ``statistic`` selects
    ``tr(rho^2) - min(tr rho_A^2, tr rho_B^2)`` (``"purity"``) or ``||T||^2``
    (``"correlation"``).
    """
    d = rho.d
    val = _second_moment_value(rho, statistic)
    scale = max(1.0, abs(second_moment_reference(d, d, statistic)))
    for mu in range(1, d):
        if val <= second_moment_reference(d, mu, statistic) + 1e-12 * scale:
            return mu
    return d


def second_moment_criterion(rho: StateModel, statistic: str = "purity") -> CriterionResult:
    return CriterionResult(
        f"2-RMs-{statistic}",
        _second_moment_value(rho, statistic),
        sn_from_second_moment(rho, statistic),
        0,
    )


def trace_distance_lower_bound(R, Q, d: int):
    """Lower bound on the trace-distance entanglement measure, ``F(R, Q) - 1/d``."""
    return (fidelity_from_moments(R, Q, d) * d - 1) / d
