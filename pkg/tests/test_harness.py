import csv
import json

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from schmidt_lrp import states as st
from schmidt_lrp.errors import DomainError
from schmidt_lrp.estimator import FidelitySampleSet, estimate_sn, error_metrics
from schmidt_lrp.harness import cli
from schmidt_lrp.harness.config import (
    SEED_ENV,
    ExperimentConfig,
    default_seed,
    load_config_file,
    parse_shots,
)
from schmidt_lrp.harness.report import (
    CELL_COLUMNS,
    SCHEMA_LINE,
    TRIAL_COLUMNS,
    emit_report,
    emit_trials,
    load_report,
    sidecar_path,
)
from schmidt_lrp.harness.runner import SweepReport, run_cell, run_sweep, run_trial
from schmidt_lrp.moments import MomentSampleSet

SMALL = dict(d=6, v=0.8, n_ops=8, iters=40, seed=17)


def test_config_defaults_and_validation():
    cfg = ExperimentConfig()
    assert (cfg.n_ops, cfg.level, cfg.iters, cfg.bootstrap_b) == (12, 0.999, 2000, 5000)
    assert cfg.shots_per_projector is None
    assert cfg.replace(shots=0).shots_per_projector == 2000
    assert cfg.replace(shots=37).shots_per_projector == 37
    for bad in (dict(level=1.0), dict(n_ops=1), dict(iters=0), dict(d=1), dict(state="ghz"),
                dict(method="z"), dict(shots=-1), dict(bootstrap_method="bca")):
        with pytest.raises(DomainError):
            ExperimentConfig(**bad)


def test_config_dict_roundtrip():
    cfg = ExperimentConfig(**SMALL)
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg


def test_seed_env(monkeypatch):
    monkeypatch.setenv(SEED_ENV, "99")
    assert default_seed() == 99
    assert ExperimentConfig().seed == 99
    monkeypatch.delenv(SEED_ENV)
    assert default_seed() == 20240101


def test_parse_shots():
    assert parse_shots("exact") is None
    assert parse_shots("auto") == 0
    assert parse_shots("250") == 250
    assert parse_shots(None) is None


def test_config_file(tmp_path):
    p = tmp_path / "exp.ini"
    p.write_text("[experiment]\nstate = thermal\nd = 4\nv = 0.3, 0.9\nshots = auto\n"
                 "two_sided = false\nlevel = 0.99\n")
    scalars, grid = load_config_file(p)
    assert scalars == {"state": "thermal", "d": 4, "shots": 0, "two_sided": False, "level": 0.99}
    assert grid == {"v": [0.3, 0.9]}
    p.write_text("[experiment]\ncolour = red\n")
    with pytest.raises(DomainError):
        load_config_file(p)
    p.write_text("[other]\nd = 3\n")
    with pytest.raises(DomainError):
        load_config_file(p)


def test_trial_is_deterministic():
    cfg = ExperimentConfig(**SMALL)
    assert run_trial(cfg, 3) == run_trial(cfg, 3)
    assert run_trial(cfg, 3) != run_trial(cfg, 4)
    assert run_trial(cfg.replace(shots=0), 3) == run_trial(cfg.replace(shots=0), 3)


def test_trial_counters():
    for d in (3, 6):
        cfg = ExperimentConfig(**{**SMALL, "d": d})
        rec = run_trial(cfg, 0)
        assert (rec.n_projectors, rec.n_shots) == (5 * cfg.n_ops, 0)
        rec = run_trial(cfg.replace(shots=50), 0)
        assert (rec.n_projectors, rec.n_shots) == (5 * cfg.n_ops, 5 * cfg.n_ops * 50)


def test_trial_matches_manual_pipeline():
    cfg = ExperimentConfig(**SMALL, verbose=True)
    rec = run_trial(cfg, 2)
    est = estimate_sn(FidelitySampleSet(cfg.d, np.array(rec.fidelities)), cfg.level)
    assert (est.mu_est, est.interval.lower) == (rec.mu_est, rec.f_lb)
    assert rec.mu_fid == 5  # ceil(6 * (0.8 + 0.2/36))


def test_max_entangled_mean_fidelity_converges():
    cfg = ExperimentConfig(state="max_entangled", d=4, n_ops=2000, iters=1, verbose=True, seed=3)
    f = np.array(run_trial(cfg, 0).fidelities)
    assert f.std() > 0
    assert abs(f.mean() - 1) < 3 * f.std(ddof=1) / np.sqrt(len(f))


def test_failed_trial_recorded(monkeypatch):
    import schmidt_lrp.harness.runner as runner

    def boom(*a, **k):
        raise DomainError("injected")

    monkeypatch.setattr(runner, "estimate_sn", boom)
    rec = run_trial(ExperimentConfig(**SMALL), 0)
    assert rec.failed and "injected" in rec.error
    cell = run_cell(ExperimentConfig(**{**SMALL, "iters": 3}))
    assert cell.n_failed == 3 and cell.n_trials == 3


def test_cell_aggregation_and_baselines():
    cfg = ExperimentConfig(**SMALL)
    cell = run_cell(cfg)
    mus = cell.mu_est_values()
    assert cell.mu_est_min <= cell.mu_est_max
    assert (cell.mu_est_min, cell.mu_est_max) == (mus.min(), mus.max())
    em = error_metrics(mus.tolist(), cell.mu_fid)
    assert (cell.e_max, cell.e_min) == (em.e_max, em.e_min)
    assert cell.projections_per_trial == 5 * cfg.n_ops
    assert cell.mub_projections == 3 * cfg.d and cell.mub_valid
    assert cell.second_moment_bound >= 1
    assert run_cell(cfg.replace(baselines=False)).mub_bound is None


def test_single_cell_sweep_equals_cell():
    cfg = ExperimentConfig(**SMALL)
    rep = run_sweep(cfg, {"v": [0.8]})
    cell = run_cell(cfg)
    assert rep.cells[0] == cell
    assert [t for t in rep.cells[0].trials] == cell.trials


def test_sweep_grid_and_determinism():
    cfg = ExperimentConfig(**{**SMALL, "iters": 10})
    grid = {"v": [0.5, 0.9], "n_ops": [4, 8]}
    a = run_sweep(cfg, grid)
    b = run_sweep(cfg, grid)
    assert len(a.cells) == 4
    assert [c.params["n_ops"] for c in a.cells] == [4, 8, 4, 8]
    assert a.cells == b.cells
    assert a.cell_at(v=0.9, n_ops=8).params["v"] == 0.9
    with pytest.raises(ValueError):
        run_sweep(cfg, {"level": [0.9]})
    with pytest.raises(ValueError):
        run_sweep(cfg, {"v": []})


def test_parallel_equals_serial():
    cfg = ExperimentConfig(**{**SMALL, "iters": 12})
    serial = run_cell(cfg)
    parallel = run_cell(cfg.replace(threads=3))
    assert serial.trials == parallel.trials
    assert serial == parallel


def test_random_noise_family_per_trial_state():
    cfg = ExperimentConfig(**{**SMALL, "state": "random_noise", "iters": 6, "d": 3})
    cell = run_cell(cfg)
    assert cell.n_failed == 0
    assert cell == run_cell(cfg)


def test_other_families_run():
    for fam in ("thermal", "partial_entangled", "max_entangled"):
        cell = run_cell(ExperimentConfig(**{**SMALL, "state": fam, "iters": 3, "mu": 3}))
        assert cell.n_failed == 0


def read_csv(path):
    lines = path.read_text().splitlines()
    return lines[0], list(csv.DictReader(lines[1:]))


def test_csv_report_schema(tmp_path):
    cfg = ExperimentConfig(**{**SMALL, "iters": 5})
    rep = run_sweep(cfg, {"v": [0.5, 0.9]})
    path = emit_report(rep, tmp_path / "r.csv", "csv", cfg)
    first, rows = read_csv(path)
    assert first == SCHEMA_LINE
    assert tuple(rows[0].keys()) == CELL_COLUMNS
    assert len(rows) == 2 and [r["cell"] for r in rows] == ["0", "1"]
    assert float(rows[1]["v"]) == 0.9 and rows[0]["beta"] == ""
    meta = json.loads(sidecar_path(path).read_text())
    assert meta["seed"] == cfg.seed and meta["config"]["d"] == cfg.d and meta["version"]


def test_empty_report_header_only(tmp_path):
    path = emit_report(SweepReport(axes={}, cells=[]), tmp_path / "e.csv")
    assert path.read_text().splitlines() == [SCHEMA_LINE, ",".join(CELL_COLUMNS)]


def test_json_roundtrip(tmp_path):
    cfg = ExperimentConfig(**{**SMALL, "iters": 5})
    rep = run_sweep(cfg, {"n_ops": [4, 6]})
    path = emit_report(rep, tmp_path / "r.json", "json", cfg)
    back = load_report(path)
    assert back.axes == rep.axes
    assert back.cells == rep.cells


def test_trials_csv(tmp_path):
    cfg = ExperimentConfig(**{**SMALL, "iters": 4})
    rep = run_sweep(cfg, {"v": [0.5, 0.9]})
    first, rows = read_csv(emit_trials(rep, tmp_path / "t.csv"))
    assert first == SCHEMA_LINE and tuple(rows[0]) == TRIAL_COLUMNS and len(rows) == 8
    assert float(rows[5]["f_lb"]) == rep.cells[1].trials[1].f_lb


def test_report_io_errors(tmp_path):
    with pytest.raises(OSError, match="missing"):
        emit_report(SweepReport({}, []), tmp_path / "missing" / "r.csv")
    with pytest.raises(ValueError):
        emit_report(SweepReport({}, []), tmp_path / "r.xml", "xml")


def test_cli_resolution_precedence(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text("[experiment]\nd = 5\nv = 0.4\niters = 7\nshots = 300\n")
    args = cli.build_parser().parse_args(["sweep", "--config", str(p), "--v", "0.6,0.7", "--cl", "0.99"])
    cfg, grid = cli.resolve_config(args)
    assert (cfg.d, cfg.iters, cfg.level, cfg.shots) == (5, 7, 0.99, 300)
    assert grid == {"v": [0.6, 0.7]}
    args = cli.build_parser().parse_args(["sweep", "--config", str(p), "--shots", "exact"])
    assert cli.resolve_config(args)[0].shots is None


def test_cli_sweep_writes_report(tmp_path, capsys):
    out = tmp_path / "s.csv"
    code = cli.main(["sweep", "--d", "4", "--v", "0.5,0.9", "--iters", "5", "--n-ops", "6",
                     "--seed", "1", "--out", str(out), "--trials-out", str(tmp_path / "t.csv")])
    assert code == 0
    assert out.read_text().startswith(SCHEMA_LINE)
    assert sidecar_path(out).exists()
    assert "cell 1" in capsys.readouterr().out


def test_cli_trial_and_baselines(capsys):
    assert cli.main(["trial", "--d", "5", "--n-ops", "6", "--seed", "2", "--trial-id", "1"]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["n_projectors"] == 30
    assert cli.main(["baselines", "--d", "20", "--v", "0.95"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["mub_projections"] == 60 and out["mu_fid"] == 20


def test_cli_postprocess(tmp_path, capsys):
    d = 4
    ms = MomentSampleSet(d, np.array([0.1, 0.12, 0.09, 0.11]), np.array([-0.5, -0.45, -0.48, -0.5]))
    path = tmp_path / "m.csv"
    ms.to_csv(path)
    assert cli.main(["postprocess", str(path), "--d", str(d), "--cl", "0.9"]) == 0
    out = json.loads(capsys.readouterr().out)
    est = estimate_sn(FidelitySampleSet.from_moments(ms), 0.9)
    assert out["mu_est"] == est.mu_est and out["f_lb"] == est.interval.lower


def test_cli_errors(capsys):
    assert cli.main(["trial", "--d", "1"]) == 2
    assert "error" in capsys.readouterr().err
    assert cli.main(["trial", "--v", "0.2,0.3"]) == 2


def test_cli_selftest(capsys):
    assert cli.main(["selftest"]) == 0
    assert "FAIL" not in capsys.readouterr().out
