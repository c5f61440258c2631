import csv
import json
import math
import subprocess
import sys

import pytest

from abtubes import cli
from abtubes.config import default_config, dumps_config


def write_cfg(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(dumps_config(cfg))
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_emit_example_config_round_trips(tmp_path, capsys):
    assert cli.main(["emit-example-config", "two_particle"]) == 0
    text = capsys.readouterr().out
    path = tmp_path / "c.json"
    path.write_text(text)
    assert cli.load_config(path) == default_config("two_particle")


def test_run_single_particle(tmp_path, single_cfg):
    path = write_cfg(tmp_path, single_cfg)
    out = tmp_path / "out"
    assert cli.main(["run", str(path), "--output-dir", str(out), "--quiet"]) == 0
    report = json.loads((out / "report.json").read_text())
    results = report["results"]
    assert abs(results["measured_delta_phi"] - math.pi) < 1e-8
    assert results["analytic_delta_phi"] == pytest.approx(math.pi)
    assert abs(report["comparison"]["phase_error"]) < 1e-8
    assert report["energy_audit"]["passed"]
    rows = read_csv(out / "fringes.csv")
    assert rows[0] == ["x", "intensity_off", "intensity_on"]
    assert len(rows) == 1 + single_cfg.grid.n_points
    assert float(rows[1][0]) == -100.0


def test_run_is_byte_deterministic(tmp_path, single_cfg):
    path = write_cfg(tmp_path, single_cfg)
    for name in ("a", "b"):
        assert cli.main(["run", str(path), "--output-dir", str(tmp_path / name), "--quiet"]) == 0
    for f in ("report.json", "fringes.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_run_two_particle_report(tmp_path, small_pair_cfg):
    path = write_cfg(tmp_path, small_pair_cfg.with_updates(schedule={"v0": 10.0}))
    out = tmp_path / "out"
    assert cli.main(["run", str(path), "--output-dir", str(out), "--quiet"]) == 0
    results = json.loads((out / "report.json").read_text())["results"]
    assert results["deviation_sup"] == 0.0
    assert results["measured_delta_phi"] == 0.0


def test_invalid_config_exit_1(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"grid": {"n_points": 1000}}))
    assert cli.main(["run", str(path)]) == 1
    assert "power of two required" in capsys.readouterr().err


def test_unwritable_output_exit_1(tmp_path, single_cfg):
    path = write_cfg(tmp_path, single_cfg)
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert cli.main(["run", str(path), "--output-dir", str(blocker / "sub"), "--quiet"]) == 1


def test_env_var_output_dir(tmp_path, single_cfg, monkeypatch):
    path = write_cfg(tmp_path, single_cfg)
    target = tmp_path / "from_env"
    monkeypatch.setenv(cli.OUTPUT_DIR_ENV, str(target))
    assert cli.main(["run", str(path), "--quiet"]) == 0
    assert (target / "report.json").exists()


def test_dt_override(tmp_path, single_cfg):
    path = write_cfg(tmp_path, single_cfg)
    out = tmp_path / "out"
    assert cli.main(["run", str(path), "--output-dir", str(out), "--quiet", "--dt-override", "0.02"]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["config"]["evolution"]["dt"] == 0.02
    assert report["results"]["n_steps"] == 200
    assert cli.main(["run", str(path), "--output-dir", str(out), "--quiet", "--dt-override", "0.3"]) == 1


def test_audit_failure_exit_3(tmp_path, single_cfg, monkeypatch):
    from abtubes import scenarios

    real = scenarios.run

    def tampered(cfg, external_on=True):
        report = real(cfg, external_on)
        report.e2 += 1.0
        return report

    monkeypatch.setattr(scenarios, "run", tampered)
    path = write_cfg(tmp_path, single_cfg)
    assert cli.main(["run", str(path), "--output-dir", str(tmp_path / "o"), "--quiet"]) == 3


def test_blowup_exit_2(tmp_path, single_cfg, monkeypatch):
    from abtubes import scenarios
    from abtubes.errors import NumericalBlowupError

    def explode(cfg, external_on=True):
        raise NumericalBlowupError(17)

    monkeypatch.setattr(scenarios, "run", explode)
    path = write_cfg(tmp_path, single_cfg)
    assert cli.main(["run", str(path), "--output-dir", str(tmp_path / "o"), "--quiet"]) == 2


def test_sweep_csv(tmp_path, single_cfg):
    dt = single_cfg.schedule.t2 - single_cfg.schedule.t1
    cfg = single_cfg.with_updates(sweep={"v0_values": [0.0, math.pi / dt, 2 * math.pi / dt]})
    path = write_cfg(tmp_path, cfg)
    out = tmp_path / "out"
    assert cli.main(["sweep", str(path), "--output-dir", str(out), "--quiet"]) == 0
    rows = read_csv(out / "sweep.csv")
    assert rows[0] == ["v0", "delta_phi_measured", "delta_phi_analytic", "fringe_shift_periods"]
    measured = [float(r[1]) for r in rows[1:]]
    assert measured == pytest.approx([0.0, math.pi, 2 * math.pi], abs=1e-6)
    # 17 significant digits round-trip exactly
    assert float(rows[2][0]) == math.pi / dt


def test_sweep_requires_values(tmp_path, single_cfg):
    path = write_cfg(tmp_path, single_cfg)
    assert cli.main(["sweep", str(path), "--quiet"]) == 1


def test_validate_passes_on_defaults(tmp_path, single_cfg, capsys):
    path = write_cfg(tmp_path, single_cfg)
    assert cli.main(["validate", str(path)]) == 0
    out = capsys.readouterr().out
    for name in ("norm_drift", "convergence_order", "gauge_phase"):
        assert name in out
    assert "FAIL" not in out


def test_validate_zero_voltage(tmp_path, single_cfg):
    path = write_cfg(tmp_path, single_cfg.with_updates(schedule={"v0": 0.0}))
    assert cli.main(["validate", str(path), "--quiet"]) == 0


def test_validate_fails_with_oversized_dt(tmp_path, single_cfg):
    cfg = single_cfg.with_updates(
        schedule={"t0": 0.0, "t1": 3.0, "t2": 6.0, "t3": 9.0, "v0": 0.1}, evolution={"dt": 3.0}
    )
    path = write_cfg(tmp_path, cfg)
    assert cli.main(["validate", str(path), "--quiet"]) == 3


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "abtubes", "emit-example-config", "single_particle"],
        capture_output=True, text=True, check=True,
    )
    assert json.loads(proc.stdout)["mode"] == "single_particle"
