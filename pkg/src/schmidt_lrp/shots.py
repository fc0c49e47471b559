"""Finite-statistics simulation: each projector probability from ``M`` binomial shots."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, StateValidityError
from .haar import RandomStream, _rng
from .moments import ObservablePair, projector_probabilities, projection_set
from .states import StateModel

__all__ = [
    "PROB_TOL",
    "ShotConfig",
    "ShotTally",
    "default_shots",
    "estimate_projector_prob",
    "measured_probabilities",
    "measured_E_U",
    "measured_E_O",
]

PROB_TOL = 1e-10


def default_shots(d: int) -> int:
    return 100 * d


@dataclass(frozen=True)
class ShotConfig:
    M: int
    rs: RandomStream | np.random.Generator

    def __post_init__(self):
        if self.M < 1:
            raise DomainError(f"shots per projector must be >= 1, got {self.M}")


@dataclass
class ShotTally:
    """Running count of projector settings and single-shot outcomes."""

    projectors: int = 0
    shots: int = 0

    def add(self, n_projectors: int, M: int) -> None:
        self.projectors += int(n_projectors)
        self.shots += int(n_projectors) * int(M)


def _clamp(p):
    p = np.asarray(p, dtype=float)
    if np.any(p < -PROB_TOL) or np.any(p > 1 + PROB_TOL):
        raise StateValidityError(f"probability outside [0, 1]: {p.min()}..{p.max()}")
    return np.clip(p, 0.0, 1.0)


def _binomial_freq(p, M, rng):
    return rng.binomial(M, _clamp(p)) / M


def estimate_projector_prob(rho: StateModel, P, cfg: ShotConfig, tally: ShotTally | None = None):
    """Estimate ``tr(rho P)`` for the product projector ``P = (a, b)`` from ``cfg.M`` shots.

    ``P`` is a pair of kets ``(a, b)``; batched kets give one estimate each.
    """
    a, b = P
    p = rho.product_probs(a, b)
    est = _binomial_freq(p, cfg.M, _rng(cfg.rs))
    if tally is not None:
        tally.add(np.size(p), cfg.M)
    return est


def measured_probabilities(rho, U, O, obs, cfg: ShotConfig, tally: ShotTally | None = None):
    """Shot estimates of the five projector probabilities, shape ``(..., 5)``.

    Every projector gets its own independent ``M``-shot binomial draw.
    """
    p = projector_probabilities(rho, U, O, obs)
    est = _binomial_freq(p, cfg.M, _rng(cfg.rs))
    if tally is not None:
        tally.add(p.size, cfg.M)
    return est


def measured_E_U(rho: StateModel, U, obs: ObservablePair, cfg: ShotConfig,
                 tally: ShotTally | None = None):
    e = projection_set(U, np.eye(rho.d), obs).e1
    return estimate_projector_prob(rho, (e, e), cfg, tally)


def measured_E_O(rho: StateModel, O, obs: ObservablePair, cfg: ShotConfig,
                 tally: ShotTally | None = None):
    O = np.asarray(O)
    ps = projection_set(np.eye(rho.d), O, obs)
    e2, e3 = ps.e2, ps.e3
    p = np.stack([rho.product_probs(e2, e2), rho.product_probs(e2, e3),
                  rho.product_probs(e3, e3), rho.product_probs(e3, e2)], axis=-1)
    est = _binomial_freq(p, cfg.M, _rng(cfg.rs))
    if tally is not None:
        tally.add(p.size, cfg.M)
    return est[..., 0] - est[..., 1] + est[..., 2] - est[..., 3]
