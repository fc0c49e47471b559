"""Trial and sweep execution.

Each trial draws from substreams keyed by ``(cell, trial, stage)``, so a
sweep is a pure function of its config and seed regardless of execution
order or worker count.
"""

from __future__ import annotations

import itertools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .. import states as st
from ..baselines import build_3mubs, mub_criterion, second_moment_criterion, trace_distance_lower_bound
from ..errors import SchmidtLRPError
from ..estimator import FidelitySampleSet, error_metrics, estimate_sn, per_sample_fidelity
from ..haar import RandomStream, sample_haar_orthogonal, sample_haar_unitary, stream_id
from ..moments import exact_Q, exact_R, projector_probabilities, rank_optimal, sn_from_fidelity
from ..shots import ShotConfig, ShotTally, measured_probabilities
from .config import GRID_AXES, ExperimentConfig

__all__ = [
    "TrialRecord",
    "CellSummary",
    "SweepReport",
    "build_state",
    "trial_stream",
    "run_trial",
    "run_cell",
    "run_sweep",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrialRecord:
    trial_id: int
    f_lb: float
    f_ub: float
    mu_est: int
    mu_fid: int
    n_projectors: int
    n_shots: int
    fidelities: tuple = ()
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


@dataclass
class CellSummary:
    cell: int
    params: dict
    n_trials: int
    n_failed: int
    mu_fid: int
    mu_est_min: int
    mu_est_max: int
    mu_est_mean: float
    e_max: int
    e_min: int
    n_over: int
    f_lb_mean: float
    projections_per_trial: int
    shots_per_trial: int
    mub_statistic: float | None = None
    mub_bound: int | None = None
    mub_projections: int | None = None
    mub_valid: bool | None = None
    second_moment_bound: int | None = None
    trace_distance_bound: float | None = None
    trials: list = field(default_factory=list, repr=False, compare=False)

    def mu_est_values(self) -> np.ndarray:
        return np.array([t.mu_est for t in self.trials if not t.failed], dtype=int)


@dataclass
class SweepReport:
    axes: dict
    cells: list

    def cell_at(self, **params) -> CellSummary:
        for c in self.cells:
            if all(c.params.get(k) == v for k, v in params.items()):
                return c
        raise KeyError(params)


def trial_stream(cfg: ExperimentConfig, cell: int, trial_id: int, stage: str) -> RandomStream:
    return RandomStream(cfg.seed, stream_id(cell, trial_id, stage))


def build_state(cfg: ExperimentConfig, rs=None) -> st.StateModel:
    if cfg.state == "isotropic":
        return st.isotropic(cfg.d, cfg.v)
    if cfg.state == "thermal":
        return st.thermal(cfg.d, cfg.v, cfg.beta)
    if cfg.state == "max_entangled":
        return st.max_entangled(cfg.d)
    if cfg.state == "partial_entangled":
        return st.partial_entangled(cfg.d, cfg.mu)
    if cfg.state == "random_noise":
        if rs is None:
            raise ValueError("random_noise state needs a random stream")
        return st.random_noise_state(cfg.d, cfg.v, rs)
    raise ValueError(cfg.state)


def _is_random_family(cfg):
    return cfg.state == "random_noise"


def run_trial(cfg: ExperimentConfig, trial_id: int, cell: int = 0,
              state: st.StateModel | None = None) -> TrialRecord:
    """One run of the estimation algorithm on ``cfg.n_ops`` random operation pairs."""
    try:
        return _run_trial(cfg, trial_id, cell, state)
    except (SchmidtLRPError, ValueError, np.linalg.LinAlgError) as exc:
        log.warning("trial %d of cell %d failed: %s", trial_id, cell, exc)
        nan = float("nan")
        return TrialRecord(trial_id, nan, nan, 0, 0, 0, 0, error=f"{type(exc).__name__}: {exc}")


def _run_trial(cfg, trial_id, cell, state):
    d, N = cfg.d, cfg.n_ops
    if state is None or _is_random_family(cfg):
        state = build_state(cfg, trial_stream(cfg, cell, trial_id, "state"))
    obs = rank_optimal(d, cfg.j)
    U = sample_haar_unitary(d, trial_stream(cfg, cell, trial_id, "U"), size=N)
    O = sample_haar_orthogonal(d, trial_stream(cfg, cell, trial_id, "O"), size=N)
    tally = ShotTally()
    M = cfg.shots_per_projector
    if M is None:
        p = projector_probabilities(state, U, O, obs)
        tally.add(p.size, 0)
    else:
        shot_cfg = ShotConfig(M, trial_stream(cfg, cell, trial_id, "shots"))
        p = measured_probabilities(state, U, O, obs, shot_cfg, tally)
    E_U = p[:, 0]
    E_O = p[:, 1] - p[:, 2] + p[:, 3] - p[:, 4]
    samples = FidelitySampleSet(d, per_sample_fidelity(E_U, E_O, d))
    est = estimate_sn(
        samples, cfg.level, cfg.method, cfg.bootstrap_b,
        trial_stream(cfg, cell, trial_id, "bootstrap"), cfg.bootstrap_method, cfg.two_sided,
    )
    mu_fid = sn_from_fidelity(st.fidelity_direct(state), d)
    return TrialRecord(
        trial_id,
        est.interval.lower,
        est.interval.upper,
        est.mu_est,
        mu_fid,
        tally.projectors,
        tally.shots,
        tuple(float(x) for x in samples.values) if cfg.verbose else (),
    )


def _run_chunk(args):
    cfg, cell, ids, state = args
    return [run_trial(cfg, t, cell, state) for t in ids]


def _cell_params(cfg):
    params = {
        "state": cfg.state, "d": cfg.d, "v": cfg.v, "n_ops": cfg.n_ops,
        "level": cfg.level, "method": cfg.method,
        "shots": cfg.shots_per_projector or 0, "iters": cfg.iters,
    }
    if cfg.state == "thermal":
        params["beta"] = cfg.beta
    if cfg.state == "partial_entangled":
        params["mu"] = cfg.mu
    return params


def run_cell(cfg: ExperimentConfig, cell: int = 0) -> CellSummary:
    """Run ``cfg.iters`` trials and aggregate them; baselines are computed once."""
    state = None if _is_random_family(cfg) else build_state(cfg)
    ids = list(range(cfg.iters))
    if cfg.threads > 1 and len(ids) > 1:
        chunks = [ids[i::cfg.threads] for i in range(cfg.threads)]
        with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
            parts = list(pool.map(_run_chunk, [(cfg, cell, c, state) for c in chunks]))
        trials = sorted(itertools.chain.from_iterable(parts), key=lambda t: t.trial_id)
    else:
        trials = _run_chunk((cfg, cell, ids, state))

    ok = [t for t in trials if not t.failed]
    mus = np.array([t.mu_est for t in ok], dtype=int)
    if state is None:
        ref_state = build_state(cfg, RandomStream(cfg.seed, stream_id(cell, "baseline-state")))
    else:
        ref_state = state
    mu_fid = min((t.mu_fid for t in ok), default=sn_from_fidelity(st.fidelity_direct(ref_state), cfg.d))
    if len(mus):
        em = error_metrics(mus.tolist(), mu_fid)
        mu_min, mu_max, mu_mean = int(mus.min()), int(mus.max()), float(mus.mean())
        n_over = int(sum(t.mu_est > t.mu_fid for t in ok))
        f_lb_mean = float(np.mean([t.f_lb for t in ok]))
    else:
        em = None
        mu_min = mu_max = 0
        mu_mean = f_lb_mean = float("nan")
        n_over = 0
    summary = CellSummary(
        cell=cell,
        params=_cell_params(cfg),
        n_trials=len(trials),
        n_failed=len(trials) - len(ok),
        mu_fid=mu_fid,
        mu_est_min=mu_min,
        mu_est_max=mu_max,
        mu_est_mean=mu_mean,
        e_max=em.e_max if em else 0,
        e_min=em.e_min if em else 0,
        n_over=n_over,
        f_lb_mean=f_lb_mean,
        projections_per_trial=ok[0].n_projectors if ok else 0,
        shots_per_trial=ok[0].n_shots if ok else 0,
        trials=trials,
    )
    if cfg.baselines:
        _attach_baselines(summary, cfg, ref_state)
    return summary


def _attach_baselines(summary, cfg, rho):
    mubs = build_3mubs(cfg.d, cfg.alpha_mub)
    mub = mub_criterion(rho, mubs)
    summary.mub_statistic = mub.statistic
    summary.mub_bound = mub.sn_bound
    summary.mub_projections = mub.projection_count
    summary.mub_valid = mubs.valid
    summary.second_moment_bound = second_moment_criterion(rho).sn_bound
    summary.trace_distance_bound = float(trace_distance_lower_bound(exact_R(rho), exact_Q(rho), cfg.d))


def run_sweep(cfg: ExperimentConfig, grid: dict | None = None) -> SweepReport:
    """Run every cell of the Cartesian product of ``grid`` axes applied to ``cfg``."""
    grid = {k: list(v) for k, v in (grid or {}).items()}
    for k in grid:
        if k not in GRID_AXES:
            raise ValueError(f"cannot sweep over {k!r}; allowed axes: {GRID_AXES}")
        if not grid[k]:
            raise ValueError(f"grid axis {k!r} is empty")
    keys = list(grid)
    cells = []
    for idx, values in enumerate(itertools.product(*(grid[k] for k in keys))):
        cell_cfg = cfg.replace(**dict(zip(keys, values)))
        log.info("cell %d: %s", idx, dict(zip(keys, values)))
        cells.append(run_cell(cell_cfg, idx))
    return SweepReport(axes=grid, cells=cells)
