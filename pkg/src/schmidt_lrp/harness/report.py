"""Tabular output of sweep reports.

CSV files start with a ``# schmidt-lrp sweep schema v1`` comment line
followed by a header row with the columns in :data:`CELL_COLUMNS`; one row
per cell in cell order. Baseline columns are empty when baselines were
disabled. Every report also gets a ``<path>.meta.json`` sidecar holding the
config, seed and package version.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

from .config import ExperimentConfig
from .runner import CellSummary, SweepReport

__all__ = [
    "SCHEMA_VERSION",
    "SCHEMA_LINE",
    "CELL_COLUMNS",
    "TRIAL_COLUMNS",
    "emit_report",
    "emit_trials",
    "load_report",
    "report_rows",
    "sidecar_path",
]

SCHEMA_VERSION = 1
SCHEMA_LINE = f"# schmidt-lrp sweep schema v{SCHEMA_VERSION}"

PARAM_COLUMNS = ("state", "d", "v", "beta", "mu", "n_ops", "level", "method", "shots", "iters")
SUMMARY_COLUMNS = (
    "n_trials", "n_failed", "mu_fid", "mu_est_min", "mu_est_max", "mu_est_mean",
    "e_max", "e_min", "n_over", "f_lb_mean", "projections_per_trial", "shots_per_trial",
    "mub_statistic", "mub_bound", "mub_projections", "mub_valid",
    "second_moment_bound", "trace_distance_bound",
)
CELL_COLUMNS = ("cell",) + PARAM_COLUMNS + SUMMARY_COLUMNS
TRIAL_COLUMNS = ("cell", "trial_id", "f_lb", "f_ub", "mu_est", "mu_fid",
                 "n_projectors", "n_shots", "error")


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".meta.json")


def _version():
    from .. import __version__
    return __version__


def report_rows(report: SweepReport) -> list[dict]:
    rows = []
    for c in report.cells:
        row = {"cell": c.cell}
        row.update({k: c.params.get(k) for k in PARAM_COLUMNS})
        row.update({k: getattr(c, k) for k in SUMMARY_COLUMNS})
        rows.append(row)
    return rows


def _csv_value(x):
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return x


def _open_for_write(path):
    try:
        return open(path, "w", newline="")
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc


def emit_report(report: SweepReport, path, format: str = "csv",
                cfg: ExperimentConfig | None = None) -> Path:
    """Write ``report`` as CSV or JSON plus the metadata sidecar; returns ``path``."""
    path = Path(path)
    rows = report_rows(report)
    if format == "csv":
        with _open_for_write(path) as fh:
            fh.write(SCHEMA_LINE + "\n")
            w = csv.DictWriter(fh, fieldnames=CELL_COLUMNS, lineterminator="\n")
            w.writeheader()
            for row in rows:
                w.writerow({k: _csv_value(v) for k, v in row.items()})
    elif format == "json":
        doc = {"schema": SCHEMA_VERSION, "axes": report.axes, "columns": list(CELL_COLUMNS),
               "cells": [_json_safe(r) for r in rows]}
        with _open_for_write(path) as fh:
            json.dump(doc, fh, indent=2)
    else:
        raise ValueError(f"unknown report format {format!r}")
    meta = {
        "schema": SCHEMA_VERSION,
        "version": _version(),
        "seed": cfg.seed if cfg else None,
        "config": cfg.to_dict() if cfg else None,
        "axes": report.axes,
        "format": format,
    }
    with _open_for_write(sidecar_path(path)) as fh:
        json.dump(meta, fh, indent=2)
    return path


def _json_safe(row):
    # JSON has no NaN; store it as null and restore it on load
    return {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in row.items()}


def emit_trials(report: SweepReport, path) -> Path:
    """Write every trial record of every cell as CSV (same schema comment line)."""
    path = Path(path)
    with _open_for_write(path) as fh:
        fh.write(SCHEMA_LINE + "\n")
        w = csv.DictWriter(fh, fieldnames=TRIAL_COLUMNS, lineterminator="\n")
        w.writeheader()
        for c in report.cells:
            for t in c.trials:
                w.writerow({
                    "cell": c.cell, "trial_id": t.trial_id, "f_lb": repr(t.f_lb),
                    "f_ub": repr(t.f_ub), "mu_est": t.mu_est, "mu_fid": t.mu_fid,
                    "n_projectors": t.n_projectors, "n_shots": t.n_shots, "error": t.error or "",
                })
    return path


def load_report(path) -> SweepReport:
    """Re-read a JSON report written by :func:`emit_report` (trials are not stored)."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise OSError(f"cannot read report {path}: {exc}") from exc
    if doc.get("schema") != SCHEMA_VERSION:
        raise ValueError(f"{path}: unsupported schema {doc.get('schema')!r}")
    cells = []
    for row in doc["cells"]:
        params = {k: row[k] for k in PARAM_COLUMNS if row.get(k) is not None}
        kw = {k: row[k] for k in SUMMARY_COLUMNS}
        for k in ("mu_est_mean", "f_lb_mean"):
            if kw[k] is None:
                kw[k] = float("nan")
        cells.append(CellSummary(cell=row["cell"], params=params, **kw))
    return SweepReport(axes=doc["axes"], cells=cells)

