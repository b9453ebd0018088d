import json
import os

import numpy as np
import pytest

from chlab.cli import main
from chlab.fieldio import read_diagnostics_csv, read_steady


BASE = """
dim = 1
n = 128
length = 8.0
sigma = 1.0
c = 0.0
theta_u = 0.6
theta0_u = 1.0
theta_v = 0.6
theta0_v = 1.0
coupling_a = 0.1
tau = 0.01
t_end = 0.2
seed = 3
amplitude = 0.05
mean_u = 0.1
mean_v = 0.2
"""


def write_cfg(tmp_path, extra="", name="run.cfg"):
    path = tmp_path / name
    path.write_text(BASE + extra)
    return path


def test_cmd_run_produces_outputs(tmp_path, capsys):
    out = tmp_path / "out"
    cfg = write_cfg(tmp_path, f"out_dir = {out}\nsnapshot_stride = 10\n")
    assert main(["run", str(cfg)]) == 0
    echo, recs = read_diagnostics_csv(out / "diagnostics.csv")
    assert len(recs) == 20
    assert echo["sigma"] == "1.0"
    assert (out / "checkpoint.chk").exists()
    snaps = sorted(out.glob("snapshot_*.chf"))
    assert [s.name for s in snaps] == ["snapshot_00000000.chf", "snapshot_00000010.chf", "snapshot_00000020.chf"]


def test_cmd_run_zero_steps_header_only(tmp_path):
    out = tmp_path / "out"
    cfg = write_cfg(tmp_path, f"out_dir = {out}\nt_end = 0.0\n")
    assert main(["run", str(cfg)]) == 0
    echo, recs = read_diagnostics_csv(out / "diagnostics.csv")
    assert recs == []


def test_cmd_run_determinism(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    cfg1 = write_cfg(tmp_path, f"out_dir = {out1}\n", "a.cfg")
    cfg2 = write_cfg(tmp_path, f"out_dir = {out2}\n", "b.cfg")
    assert main(["run", str(cfg1)]) == 0
    assert main(["run", str(cfg2)]) == 0
    rows1 = (out1 / "diagnostics.csv").read_text().splitlines()
    rows2 = (out2 / "diagnostics.csv").read_text().splitlines()
    # identical apart from the echoed out_dir line
    d1 = [r for r in rows1 if not r.startswith("# out_dir")]
    d2 = [r for r in rows2 if not r.startswith("# out_dir")]
    assert d1 == d2


def test_cmd_run_invalid_config(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "c = 2.0\n")
    assert main(["run", str(cfg)]) == 1
    err = capsys.readouterr().err
    payload = json.loads(err.strip().splitlines()[-1])
    assert payload["error"] == "ConfigError"
    assert any("|c| < 1" in v for v in payload["detail"])


def test_cmd_resume_matches_uninterrupted(tmp_path):
    out_full = tmp_path / "full"
    out_part = tmp_path / "part"
    cfg_full = write_cfg(tmp_path, f"out_dir = {out_full}\nt_end = 0.2\n", "full.cfg")
    cfg_part = write_cfg(tmp_path, f"out_dir = {out_part}\nt_end = 0.1\n", "part.cfg")
    assert main(["run", str(cfg_full)]) == 0
    assert main(["run", str(cfg_part)]) == 0
    assert (
        main(["resume", str(out_part / "checkpoint.chk"), "--t-end", "0.2"]) == 0
    )
    _, full = read_diagnostics_csv(out_full / "diagnostics.csv")
    resumed_csv = next(out_part.glob("diagnostics.resume-from-*.csv"))
    _, resumed = read_diagnostics_csv(resumed_csv)
    last_full = full[-1]
    last_res = resumed[-1]
    assert last_res.step == last_full.step
    for name in (
        "t", "mass_u", "mass_v", "psi", "psi_hat", "psi_tilde", "grad_mu_sq",
        "grad_phitilde_sq", "oono_source", "min_u", "max_u", "min_v", "max_v",
        "energy_residual", "steady_res_u", "steady_res_v",
    ):
        a, b = getattr(last_full, name), getattr(last_res, name)
        assert abs(a - b) <= 1e-9 * max(1.0, abs(a)), name


def test_cmd_steady_writes_steady_and_probe(tmp_path, capsys):
    out = tmp_path / "out"
    extra = (
        f"out_dir = {out}\nsigma = 1.0\nc = 0.1\nmean_v = 0.1\n"
        "theta_u = 1.5\ntheta0_u = 0.5\ntheta_v = 1.5\ntheta0_v = 0.5\n"
        "strict_h0 = false\nt_end = 4.0\ntau = 0.05\nsnapshot_stride = 20\n"
    )
    cfg = write_cfg(tmp_path, extra)
    assert main(["steady", str(cfg)]) == 0
    steady, mult = read_steady(out / "steady.chf")
    assert np.max(np.abs(steady.u.values - 0.1)) < 1e-7  # convex regime: constants
    probe_text = (out / "ls_probe.csv").read_text().splitlines()
    assert probe_text[0].startswith("# consistent =")
    assert probe_text[1] == "t,theta,lhs,rhs,ratio"
    assert len(probe_text) > 2


def test_cmd_check_passes(capsys):
    assert main(["check"]) == 0
    out = capsys.readouterr().out
    assert out.count("[PASS]") == 4
    assert "[FAIL]" not in out
