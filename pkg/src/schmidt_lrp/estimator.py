"""Single-trial post-processing: per-sample fidelities, confidence intervals, SN bound."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import betainc, betaln

from .errors import DomainError, ShapeError
from .haar import _rng
from .moments import MomentSampleSet, sn_from_fidelity
from .states import StateModel, fidelity_direct

__all__ = [
    "FidelitySampleSet",
    "ConfidenceInterval",
    "SnEstimate",
    "ErrorMetrics",
    "per_sample_fidelity",
    "t_quantile",
    "t_confidence_interval",
    "bootstrap_confidence_interval",
    "estimate_sn",
    "error_metrics",
    "sn_from_fidelity_witness",
    "BOOTSTRAP_METHODS",
]

BOOTSTRAP_METHODS = ("percentile", "literal", "se")


@dataclass(frozen=True)
class FidelitySampleSet:
    d: int
    values: np.ndarray

    def __post_init__(self):
        if np.ndim(self.values) != 1 or len(self.values) < 2:
            raise ShapeError("need at least two per-sample fidelities")

    @property
    def N(self) -> int:
        return len(self.values)

    @classmethod
    def from_moments(cls, samples: MomentSampleSet) -> "FidelitySampleSet":
        return cls(samples.d, per_sample_fidelity(samples.E_U, samples.E_O, samples.d))


@dataclass(frozen=True)
class ConfidenceInterval:
    lower: float
    upper: float
    level: float
    method: str

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError("interval lower bound exceeds upper bound")


@dataclass(frozen=True)
class SnEstimate:
    mu_est: int
    interval: ConfidenceInterval
    N: int


@dataclass(frozen=True)
class ErrorMetrics:
    e_max: int
    e_min: int


def per_sample_fidelity(E_U, E_O, d: int):
    """``(d+1) E_U - (d-1)/2 E_O - 1/d`` elementwise."""
    return (d + 1) * np.asarray(E_U) - (d - 1) / 2 * np.asarray(E_O) - 1 / d


def _t_upper_tail_x(p2: float, a: float) -> float:
    """Solve ``I_x(a, 1/2) = p2`` for ``x`` in (0, 1).

    ``I_x`` increases with ``x``. Newton steps are taken in ``log x`` and
    replaced by bisection whenever they leave the current bracket.
    """
    lo, hi = 0.0, 1.0
    lnB = betaln(a, 0.5)
    x = 0.5
    for _ in range(500):
        f = betainc(a, 0.5, x) - p2
        if f == 0.0:
            return x
        if f > 0:
            hi = x
        else:
            lo = x
        # d I_x / d(log x) = x * beta_pdf(x)
        log_slope = a * math.log(x) - 0.5 * math.log1p(-x) - lnB
        x_new = None
        if log_slope > -700:
            step = f / math.exp(log_slope)
            if abs(step) < 30:
                cand = x * math.exp(-step)
                if lo < cand < hi:
                    x_new = cand
        if x_new is None:
            x_new = 0.5 * (lo + hi) if lo == 0.0 else math.sqrt(lo * hi)
        if abs(x_new - x) <= 1e-15 * x or hi - lo <= 4e-16 * hi:
            return x_new
        x = x_new
    return x


def t_quantile(level: float, dof: int, two_sided: bool = True) -> float:
    """Critical value of Student's t with ``dof`` degrees of freedom.

    For ``two_sided`` (default) returns the ``1 - (1 - level)/2`` quantile, so
    ``[-t, t]`` covers probability ``level``; otherwise the ``level`` quantile.
    """
    if not 0 < level < 1:
        raise DomainError(f"level must lie in (0, 1), got {level}")
    if dof < 1:
        raise DomainError(f"degrees of freedom must be >= 1, got {dof}")
    tail = (1 - level) / 2 if two_sided else 1 - level
    if tail == 0.5:
        return 0.0
    sign = 1.0
    if tail > 0.5:
        tail, sign = 1 - tail, -1.0
    # P(T > t) = I_{dof/(dof+t^2)}(dof/2, 1/2) / 2
    nu = float(dof)
    x = _t_upper_tail_x(2 * tail, nu / 2)
    return sign * math.sqrt(nu * (1 - x) / x)


def t_confidence_interval(samples: FidelitySampleSet, level: float,
                          two_sided: bool = True) -> ConfidenceInterval:
    vals = np.asarray(samples.values, dtype=float)
    N = len(vals)
    mean = float(np.mean(vals))
    s = float(np.std(vals, ddof=1))
    if s == 0.0:
        return ConfidenceInterval(mean, mean, level, "t")
    half = s * t_quantile(level, N - 1, two_sided) / math.sqrt(N)
    return ConfidenceInterval(mean - half, mean + half, level, "t")


def bootstrap_confidence_interval(samples: FidelitySampleSet, level: float, B: int, rs,
                                  method: str = "percentile",
                                  two_sided: bool = True) -> ConfidenceInterval:
    """Bootstrap interval for the mean fidelity from ``B`` resamples.

    ``method``:

    * ``"percentile"`` -- quantiles of the bootstrap means (default).
    * ``"literal"`` -- the t-formula applied to the ``B`` bootstrap means
      (``B - 1`` degrees of freedom, ``sqrt(B)`` scaling). Collapses as ``B`` grows.
    * ``"se"`` -- mean of bootstrap means plus/minus ``t_{level, N-1}`` times
      their standard deviation.
    """
    if B < 100:
        raise DomainError(f"need at least 100 bootstrap resamples, got {B}")
    if method not in BOOTSTRAP_METHODS:
        raise DomainError(f"unknown bootstrap method {method!r}")
    vals = np.asarray(samples.values, dtype=float)
    N = len(vals)
    if np.all(vals == vals[0]):
        c = float(vals[0])
        return ConfidenceInterval(c, c, level, f"bootstrap-{method}")
    rng = _rng(rs)
    idx = rng.integers(0, N, size=(B, N))
    means = vals[idx].mean(axis=1)
    if method == "percentile":
        tail = (1 - level) / 2 if two_sided else 1 - level
        lo, hi = np.quantile(means, [tail, 1 - tail])
    else:
        center = float(means.mean())
        sd = float(means.std(ddof=1))
        if method == "literal":
            half = sd * t_quantile(level, B - 1, two_sided) / math.sqrt(B)
        else:
            half = sd * t_quantile(level, N - 1, two_sided)
        lo, hi = center - half, center + half
    return ConfidenceInterval(float(lo), float(hi), level, f"bootstrap-{method}")


def estimate_sn(samples: FidelitySampleSet, level: float, method: str = "t", B: int = 5000,
                rs=None, bootstrap_method: str = "percentile",
                two_sided: bool = True) -> SnEstimate:
    """Schmidt-number lower bound from the lower confidence limit of the fidelity."""
    if method == "t":
        ci = t_confidence_interval(samples, level, two_sided)
    elif method == "bootstrap":
        if rs is None:
            raise DomainError("bootstrap needs a random stream")
        ci = bootstrap_confidence_interval(samples, level, B, rs, bootstrap_method, two_sided)
    else:
        raise DomainError(f"unknown method {method!r}")
    return SnEstimate(sn_from_fidelity(ci.lower, samples.d), ci, samples.N)


def error_metrics(estimates, mu_fid: int) -> ErrorMetrics:
    mus = [e.mu_est if isinstance(e, SnEstimate) else int(e) for e in estimates]
    if not mus:
        raise DomainError("error metrics need at least one estimate")
    return ErrorMetrics(e_max=mu_fid - min(mus), e_min=mu_fid - max(mus))


def sn_from_fidelity_witness(rho: StateModel) -> int:
    """Reference Schmidt number certified by the exact fidelity witness."""
    return sn_from_fidelity(fidelity_direct(rho), rho.d)
