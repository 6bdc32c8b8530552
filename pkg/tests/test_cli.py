import csv
import subprocess
import sys

import numpy as np
import pytest

from qsync.cli import EXIT_ERROR, EXIT_OK, EXIT_UNCONVERGED, main
from qsync.config import loads_config
from qsync.measures import MEASURE_COLUMNS
from qsync.states import load_matrix
from qsync.sweep import TONGUE_COLUMNS


def run(tmp_path, command, *sets, extra=()):
    args = [command, "--set", f'output.directory="{tmp_path}"']
    for s in sets:
        args += ["--set", s]
    return main(args + list(extra))


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_steady_outputs(tmp_path):
    rc = run(tmp_path, "steady", "numerics.m_cut=1", "numerics.tier_cap=3", "measures.n_phi=128")
    assert rc == EXIT_OK
    curve = np.array(rows(tmp_path / "steady_curve.csv")[1:], float)
    assert curve.shape == (128, 2) and abs(curve[:, 1].mean()) < 1e-12
    summary = rows(tmp_path / "steady_summary.csv")
    assert summary[0][:2] == ["delta", "lambda"] and summary[1][-2:] == ["true", "inf"]
    assert float(summary[1][5]) >= curve[:, 1].max()
    rho = load_matrix(tmp_path / "steady_rho.txt")
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-14)
    assert len(list(tmp_path.glob("steady_*.svg"))) == 1


def test_steady_dephasing_curve_vanishes(tmp_path):
    rc = run(tmp_path, "steady", "physical.h=1.0", "physical.gamma=0.2", "numerics.m_cut=1",
             "numerics.tier_cap=3", "initial_state.preset=diagonal_thermal", extra=["--no-plot"])
    # diagonal algebra is invariant, so the stationary state is not unique
    assert rc == EXIT_UNCONVERGED
    curve = np.array(rows(tmp_path / "steady_curve.csv")[1:], float)
    assert np.abs(curve[:, 1]).max() < 1e-6
    assert not list(tmp_path.glob("*.svg"))


def test_evolve_outputs(tmp_path):
    out = tmp_path / "fig.svg"
    rc = run(tmp_path, "evolve", "physical.lambda=0.0", "initial_state.preset=diagonal_thermal",
             "numerics.t_final=1.0", "numerics.sample_every=20", "numerics.tier_cap=2",
             extra=["--out", str(out)])
    assert rc == EXIT_OK and out.read_text().startswith("<?xml")
    meas = rows(tmp_path / "measures.csv")
    assert meas[0] == MEASURE_COLUMNS and len(meas) == 12
    assert all(float(r[1]) == 0.0 for r in meas[1:])
    traj = rows(tmp_path / "trajectory.csv")
    assert len(traj[0]) == 163 and len(traj) == 12


def test_evolve_rejects_large_step(tmp_path, capsys):
    rc = run(tmp_path, "evolve", "numerics.dt=0.05")
    assert rc == EXIT_ERROR
    assert "1/(2 nu_M)" in capsys.readouterr().err


def test_missing_config_file(tmp_path, capsys):
    assert main(["steady", "--config", str(tmp_path / "none.toml")]) == EXIT_ERROR
    assert "config error" in capsys.readouterr().err


def test_sweep_outputs(tmp_path):
    rc = run(tmp_path, "sweep", "numerics.m_cut=1", "numerics.tier_cap=3", "sweep.n_delta=3",
             "sweep.n_lambda=2", "sweep.delta_min=0.01", extra=["--workers", "1"])
    # the lam = 0 cells have no unique stationary state
    assert rc == EXIT_UNCONVERGED
    table = rows(tmp_path / "tongue.csv")
    assert table[0] == TONGUE_COLUMNS and len(table) == 7
    for r in table[1:]:
        if float(r[1]) == 0.0:
            assert float(r[2]) < 1e-10 and r[6] == "false"
        else:
            assert r[6] == "true" and float(r[5]) < 1e-8
    assert len(list(tmp_path.glob("sweep_*.svg"))) == 1


def test_sweep_records_cell_failures(tmp_path):
    nu1 = 2 * np.pi / 0.3
    rc = run(tmp_path, "sweep", "numerics.m_cut=0", "numerics.tier_cap=1", "sweep.n_delta=1",
             "sweep.n_lambda=1", "sweep.lambda_min=0.05", "numerics.dt=0.001",
             f"physical.gamma={nu1 * (1 + 1e-6)}", extra=["--no-plot"])
    assert rc in (EXIT_OK, EXIT_UNCONVERGED)


def test_check_outputs(tmp_path):
    rc = run(tmp_path, "check", "physical.lambda=0.0", "check.pairs=[[0, 0], [1, 2]]")
    assert rc == EXIT_OK
    table = rows(tmp_path / "convergence.csv")
    assert table[0][:3] == ["m_cut", "tier_cap", "s_r_max"]
    assert all(abs(float(r[2])) < 1e-10 for r in table[1:])
    assert table[1][-1] == "true"


def test_check_unconverged_exit(tmp_path):
    rc = run(tmp_path, "check", "check.pairs=[[0, 0], [1, 1]]", "check.tolerance=1e-9")
    assert rc == EXIT_UNCONVERGED


def test_dump_config_round_trip(tmp_path, capsys):
    assert main(["steady", "--set", "physical.delta=0.001", "--dump-config"]) == EXIT_OK
    text = capsys.readouterr().out
    cfg = loads_config(text)
    assert cfg.physical.delta == 0.001
    p = tmp_path / "d.toml"
    p.write_text(text)
    assert main(["steady", "--config", str(p), "--dump-config"]) == EXIT_OK
    assert capsys.readouterr().out == text


def test_shipped_configs_parse():
    from pathlib import Path

    from qsync.config import load_config

    configs = sorted((Path(__file__).parents[1] / "configs").glob("fig*.toml"))
    assert [c.stem for c in configs] == [f"fig{i}" for i in range(1, 8)]
    for c in configs:
        load_config(c)


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "qsync.cli", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for cmd in ("evolve", "steady", "sweep", "check"):
        assert cmd in out.stdout
