"""Command-line entry point (``schmidt-lrp``).

Settings are resolved as: command-line flags, then ``--config`` file, then
:class:`ExperimentConfig` defaults. Grid axes (``--d``, ``--v``, ``--beta``,
``--n-ops``) accept comma-separated lists for ``sweep``.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys

from .. import states as st
from ..baselines import build_3mubs, mub_criterion, second_moment_criterion, trace_distance_lower_bound
from ..errors import SchmidtLRPError
from ..estimator import FidelitySampleSet, estimate_sn
from ..haar import RandomStream, stream_id
from ..moments import MomentSampleSet, exact_Q, exact_R, sn_from_fidelity
from .config import GRID_AXES, STATE_FAMILIES, ExperimentConfig, load_config_file, parse_shots
from .report import emit_report, emit_trials
from .runner import build_state, run_sweep, run_trial
from .selftest import run_selftest

__all__ = ["build_parser", "main", "resolve_config"]

# flag dest -> config field
_FLAG_FIELDS = {
    "state": "state", "d": "d", "v": "v", "beta": "beta", "mu": "mu", "n_ops": "n_ops",
    "cl": "level", "method": "method", "bootstrap_b": "bootstrap_b",
    "bootstrap_method": "bootstrap_method", "shots": "shots", "iters": "iters",
    "seed": "seed", "alpha_mub": "alpha_mub", "threads": "threads", "j": "j",
}


def _list_or_scalar(typ):
    def parse(text):
        parts = [typ(p) for p in text.split(",") if p.strip()]
        if not parts:
            raise argparse.ArgumentTypeError("empty value")
        return parts if len(parts) > 1 else parts[0]
    return parse


def _add_common(p):
    g = p.add_argument_group("experiment")
    g.add_argument("--config", help="INI config file with an [experiment] section")
    g.add_argument("--state", choices=STATE_FAMILIES)
    g.add_argument("--d", type=_list_or_scalar(int))
    g.add_argument("--v", type=_list_or_scalar(float))
    g.add_argument("--beta", type=_list_or_scalar(float))
    g.add_argument("--mu", type=int, help="Schmidt rank of partial_entangled")
    g.add_argument("--n-ops", type=_list_or_scalar(int), help="random operation pairs N")
    g.add_argument("--cl", type=float, help="confidence level, e.g. 0.999")
    g.add_argument("--one-sided", action="store_true", help="one-sided confidence bound")
    g.add_argument("--method", choices=("t", "bootstrap"))
    g.add_argument("--bootstrap-b", type=int)
    g.add_argument("--bootstrap-method", choices=("percentile", "literal", "se"))
    g.add_argument("--shots", type=parse_shots, default=argparse.SUPPRESS,
                   help="'exact', 'auto' (100 d) or shots M")
    g.add_argument("--iters", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--alpha-mub", type=int)
    g.add_argument("--j", type=int, help="basis index of the rank-one observable")
    g.add_argument("--threads", type=int)
    g.add_argument("--no-baselines", action="store_true")
    g.add_argument("--out", help="output path (default: stdout summary only)")
    g.add_argument("--format", choices=("csv", "json"), default="csv")
    g.add_argument("--trials-out", help="also write per-trial records as CSV")
    g.add_argument("--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="schmidt-lrp",
                                     description="Schmidt-number estimation from local random projections")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("trial", help="run a single trial and print its record")
    _add_common(p)
    p.add_argument("--trial-id", type=int, default=0)
    p = sub.add_parser("sweep", help="run N_iter trials per grid cell and emit a report")
    _add_common(p)
    p = sub.add_parser("baselines", help="print the comparison criteria for a state")
    _add_common(p)
    p = sub.add_parser("postprocess", help="estimate the Schmidt number from a moment-sample CSV")
    _add_common(p)
    p.add_argument("input", help="CSV with columns index,E_U,E_O,provenance")
    sub.add_parser("selftest", help="run the oracle-equivalence checks")
    return parser


def resolve_config(args) -> tuple[ExperimentConfig, dict]:
    """Merge defaults, config file and flags; returns ``(config, grid)``."""
    scalars, grid = ({}, {})
    if getattr(args, "config", None):
        scalars, grid = load_config_file(args.config)
    for dest, name in _FLAG_FIELDS.items():
        if dest == "shots":
            if hasattr(args, "shots"):
                scalars["shots"] = args.shots
            continue
        val = getattr(args, dest, None)
        if val is None:
            continue
        if isinstance(val, list):
            grid[name] = val
            scalars.pop(name, None)
        else:
            scalars[name] = val
            grid.pop(name, None)
    if getattr(args, "one_sided", False):
        scalars["two_sided"] = False
    if getattr(args, "no_baselines", False):
        scalars["baselines"] = False
    if getattr(args, "verbose", False):
        scalars["verbose"] = True
    for k in grid:
        if k not in GRID_AXES:
            raise SchmidtLRPError(f"{k} cannot be a grid axis")
    return ExperimentConfig.from_dict(scalars), grid


def _cmd_trial(args):
    cfg, grid = resolve_config(args)
    if grid:
        raise SchmidtLRPError("trial takes scalar parameters only")
    rec = run_trial(cfg, args.trial_id)
    out = dataclasses.asdict(rec)
    if not rec.fidelities:
        del out["fidelities"]
    print(json.dumps(out, indent=2))
    return 0 if not rec.failed else 1


def _cmd_sweep(args):
    cfg, grid = resolve_config(args)
    report = run_sweep(cfg, grid)
    for c in report.cells:
        print(f"cell {c.cell} {c.params}: mu_fid={c.mu_fid} mu_est=[{c.mu_est_min},{c.mu_est_max}] "
              f"e_max={c.e_max} e_min={c.e_min} over={c.n_over} failed={c.n_failed} "
              f"mub={c.mub_bound} 2rm={c.second_moment_bound}")
    if args.out:
        emit_report(report, args.out, args.format, cfg)
    if args.trials_out:
        emit_trials(report, args.trials_out)
    return 0


def _cmd_baselines(args):
    cfg, grid = resolve_config(args)
    if grid:
        raise SchmidtLRPError("baselines takes scalar parameters only")
    rho = build_state(cfg, RandomStream(cfg.seed, stream_id("baselines")))
    mub = mub_criterion(rho, build_3mubs(cfg.d, cfg.alpha_mub))
    out = {
        "d": cfg.d,
        "state": cfg.state,
        "mu_fid": sn_from_fidelity(st.fidelity_direct(rho), cfg.d),
        "mub_statistic": mub.statistic,
        "mub_bound": mub.sn_bound,
        "mub_projections": mub.projection_count,
        "second_moment_bound": second_moment_criterion(rho).sn_bound,
        "trace_distance_bound": float(trace_distance_lower_bound(exact_R(rho), exact_Q(rho), cfg.d)),
    }
    print(json.dumps(out, indent=2))
    return 0


def _cmd_postprocess(args):
    cfg, grid = resolve_config(args)
    if grid:
        raise SchmidtLRPError("postprocess takes scalar parameters only")
    moments = MomentSampleSet.from_csv(args.input, cfg.d)
    samples = FidelitySampleSet.from_moments(moments)
    est = estimate_sn(samples, cfg.level, cfg.method, cfg.bootstrap_b,
                      RandomStream(cfg.seed, stream_id("postprocess")), cfg.bootstrap_method,
                      cfg.two_sided)
    print(json.dumps({"N": est.N, "mu_est": est.mu_est, "f_lb": est.interval.lower,
                      "f_ub": est.interval.upper, "level": est.interval.level,
                      "method": est.interval.method}, indent=2))
    return 0


def _cmd_selftest(args):
    return 0 if run_selftest() else 1


_COMMANDS = {"trial": _cmd_trial, "sweep": _cmd_sweep, "baselines": _cmd_baselines,
             "postprocess": _cmd_postprocess, "selftest": _cmd_selftest}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except (SchmidtLRPError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
