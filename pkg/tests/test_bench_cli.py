import csv
import json

import numpy as np
import pytest

from orientbench.bench import (
    CSV_COLUMNS,
    WORKERS_ENV,
    quad_scenario,
    run_frame_ilqr,
    run_quad_ilqr,
    run_wahba,
    worker_count,
)
from orientbench.cli import main
from orientbench.config import BenchConfig, dump_config, load_config
from orientbench.trace import ConvergenceTrace


def small_config(tmp_path=None):
    cfg = BenchConfig(seed=3)
    cfg.wahba.replicates = 3
    cfg.wahba.max_iters = 8
    cfg.frame.replicates = 2
    cfg.frame.horizon_s = 0.4
    cfg.frame.max_iters = 5
    cfg.quad.replicates = 2
    cfg.quad.horizon_s = 0.1
    cfg.quad.max_iters = 3
    return cfg


# ------------------------------------------------------------------ config


def test_config_roundtrip(tmp_path):
    cfg = small_config()
    cfg.quad.torque_max = (1.0, 2.0, 3.0)
    cfg.quad.include_gravity = False
    path = tmp_path / "bench.ini"
    path.write_text(dump_config(cfg))
    again = load_config(path)
    assert again == cfg


def test_config_overrides(tmp_path):
    path = tmp_path / "bench.ini"
    path.write_text("[bench]\nseed = 11\n\n[quad]\nw_R = 3.5\ninertia = 0.1, 0.2, 0.3\n")
    cfg = load_config(path)
    assert cfg.seed == 11
    assert cfg.quad.w_R == 3.5
    assert cfg.quad.inertia == (0.1, 0.2, 0.3)
    assert cfg.frame == BenchConfig().frame


@pytest.mark.parametrize("text", ["[quad]\nthrust = 3\n", "[nope]\nx = 1\n", "[quad]\ninclude_gravity = maybe\n"])
def test_config_rejects_bad_input(tmp_path, text):
    path = tmp_path / "bad.ini"
    path.write_text(text)
    with pytest.raises((KeyError, ValueError)):
        load_config(path)


def test_scenario_options():
    cfg = BenchConfig()
    frame = cfg.ilqr.options(cfg.frame, seed=5)
    quad = cfg.ilqr.options(cfg.quad)
    assert frame.regularization == "control" and quad.regularization == "state"
    assert frame.max_iters == cfg.frame.max_iters
    assert frame.seed == 5
    assert len(frame.alphas) == 11 and frame.alphas[-1] == 2.0**-10


def test_quad_initial_controls_respect_bounds():
    cfg = BenchConfig()
    task, u0, _ = quad_scenario(cfg, np.random.SeedSequence(0))
    assert u0.shape == (200, 4)
    assert np.all(u0 >= task.bounds.lower) and np.all(u0 <= task.bounds.upper)


# ------------------------------------------------------------------ reports


def test_trace_padding():
    t = ConvergenceTrace()
    for v in (3.0, 2.0, 1.0):
        t.record(v, 0.0)
    values, _ = t.padded(5)
    np.testing.assert_array_equal(values, [3, 2, 1, 1, 1, 1])
    with pytest.raises(ValueError):
        t.record(float("nan"), 0.0)


def test_wahba_report_shape(tmp_path):
    cfg = small_config()
    report = run_wahba(cfg, ["so3", "flat"])
    assert report.replicates == 3
    paths = report.write(tmp_path)
    assert [p.name for p in paths] == ["wahba_so3.csv", "wahba_flat.csv", "wahba_summary.json"]
    with open(paths[0], newline="") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert len(rows) - 1 == 3 * (cfg.wahba.max_iters + 1)
    summary = json.loads(paths[2].read_text())
    entry = summary["representations"]["so3"]
    assert all(a <= b <= c for a, b, c in zip(entry["p25"], entry["median"], entry["p75"]))


def test_wahba_rejects_unknown_representation():
    with pytest.raises(ValueError):
        run_wahba(small_config(), ["quaternion"])


def test_ilqr_rejects_flat_matrix():
    with pytest.raises(ValueError):
        run_frame_ilqr(small_config(), ["flat"])


def _csv_bytes(report, tmp_path, name):
    out = tmp_path / name
    return {p.name: p.read_bytes() for p in report.write(out)}


@pytest.mark.parametrize("runner", [run_wahba, run_frame_ilqr, run_quad_ilqr])
def test_outputs_are_byte_identical_across_workers(runner, tmp_path):
    cfg = small_config()
    a = _csv_bytes(runner(cfg, workers=1), tmp_path, "a")
    b = _csv_bytes(runner(cfg, workers=1), tmp_path, "b")
    c = _csv_bytes(runner(cfg, workers=2), tmp_path, "c")
    assert a == b == c


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv(WORKERS_ENV, "3")
    assert worker_count() == 3
    assert worker_count(1) == 1
    monkeypatch.delenv(WORKERS_ENV)
    assert worker_count() == 1


def test_wall_time_column_only_when_requested(tmp_path):
    cfg = small_config()
    report = run_wahba(cfg, ["so3"])
    rows = list(report.csv_rows("so3"))
    assert all(r[4] == "" for r in rows)
    rows = list(report.csv_rows("so3", record_wall_time=True))
    assert all(float(r[4]) >= 0.0 for r in rows)


# ------------------------------------------------------------------ cli


def test_cli_wahba(tmp_path, capsys):
    code = main(["wahba", "--replicates", "2", "--max-iters", "5", "--repr", "so3,euler", "--out", str(tmp_path)])
    assert code == 0
    out = capsys.readouterr().out
    assert "so3" in out and "euler" in out
    assert (tmp_path / "wahba_euler.csv").exists()


def test_cli_frame(tmp_path):
    code = main(["frame-ilqr", "--replicates", "1", "--horizon", "0.2", "--max-iters", "3", "--repr", "so3", "--out", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "frame-ilqr_so3.csv").exists()


def test_cli_quad(tmp_path):
    code = main(["quad-ilqr", "--replicates", "1", "--horizon", "0.05", "--max-iters", "2", "--repr", "euler", "--out", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "quad-ilqr_summary.json").exists()


def test_cli_bad_representation(tmp_path, capsys):
    assert main(["wahba", "--repr", "nope", "--out", str(tmp_path)]) == 2
    assert "error" in capsys.readouterr().err


def test_cli_bad_horizon(tmp_path):
    assert main(["frame-ilqr", "--horizon", "0.013", "--out", str(tmp_path)]) == 2


def test_cli_config_file(tmp_path):
    ini = tmp_path / "c.ini"
    ini.write_text("[wahba]\nreplicates = 1\nmax_iters = 2\n")
    assert main(["wahba", "--config", str(ini), "--repr", "so3", "--out", str(tmp_path / "o")]) == 0
    rows = (tmp_path / "o" / "wahba_so3.csv").read_text().splitlines()
    assert len(rows) == 1 + 3


def test_cli_selftest_passes(capsys):
    assert main(["selftest", "--samples", "50"]) == 0
    assert "FAIL" not in capsys.readouterr().out


def test_cli_selftest_injected_failure(capsys):
    assert main(["selftest", "--samples", "20", "--inject-failure"]) == 1
    assert "FAIL" in capsys.readouterr().out
