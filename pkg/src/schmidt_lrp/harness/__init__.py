"""Experiment harness: configuration, trial and sweep runners, reports, CLI."""

from .config import ExperimentConfig, load_config_file
from .report import emit_report, emit_trials, load_report
from .runner import CellSummary, SweepReport, TrialRecord, run_cell, run_sweep, run_trial

__all__ = [
    "ExperimentConfig",
    "load_config_file",
    "TrialRecord",
    "CellSummary",
    "SweepReport",
    "run_trial",
    "run_cell",
    "run_sweep",
    "emit_report",
    "emit_trials",
    "load_report",
]
