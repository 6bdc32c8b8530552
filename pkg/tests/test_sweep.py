import csv
import math

import numpy as np
import pytest

from qsync.sweep import (
    TONGUE_COLUMNS,
    CellConfig,
    SweepGrid,
    ZeroReference,
    arnold_tongue,
    default_tongue_grid,
    row_width,
    solve_cell,
    temperature_scan,
    tongue_width,
    worker_count,
    write_tongue_csv,
)

SMALL = CellConfig(m_cut=1, tier_cap=3)


def test_tongue_width_constant_and_zero():
    d = np.linspace(0, 0.1, 11)
    assert tongue_width(d, np.full(11, 0.3)) == pytest.approx(0.1)
    with pytest.raises(ZeroReference):
        tongue_width(d, np.zeros(11))
    assert tongue_width([0.0], [1.0]) == 0.0
    with pytest.raises(ValueError):
        tongue_width([np.nan], [1.0])


def test_tongue_width_interpolates():
    d = np.array([0.0, 1.0, 2.0, 3.0])
    s = np.array([1.0, 0.8, 0.2, 0.0])
    # crosses 0.5 halfway between 1 and 2
    assert tongue_width(d, s) == pytest.approx(1.5)
    assert tongue_width(d, s, threshold=0.9) == pytest.approx(0.5)
    # symmetric row, reference at the centre; unsorted input
    d2 = np.array([1.0, -1.0, 0.0, 2.0, -2.0])
    s2 = np.array([0.5, 0.5, 1.0, 0.0, 0.0])
    assert tongue_width(d2, s2) == pytest.approx(2.0)
    # nan cells are skipped
    assert tongue_width([0, 1, 2], [1.0, np.nan, 1.0]) == pytest.approx(2.0)


def test_solve_cell_records_errors():
    rec = solve_cell(CellConfig(gamma=2 * np.pi / 0.3, beta=0.3))
    assert rec.error is not None and "DegenerateBath" in rec.error
    assert not rec.converged and math.isnan(rec.s_r_max)
    rec = solve_cell(CellConfig(method="bogus", tier_cap=1, m_cut=0))
    assert "unknown steady-state method" in rec.error


def test_solve_cell_values():
    rec = solve_cell(SMALL)
    assert rec.error is None and rec.converged and math.isinf(rec.t_reached)
    assert rec.s_r_max > 0 and rec.log_negativity < 1e-8 and rec.mutual_information > 0
    zero = solve_cell(CellConfig(lam=0.0, m_cut=1, tier_cap=2))
    assert zero.s_r_max < 1e-10 and abs(zero.mutual_information) < 1e-9


def test_worker_count(monkeypatch):
    monkeypatch.delenv("QSYNC_THREADS", raising=False)
    assert worker_count(3) == 3
    monkeypatch.setenv("QSYNC_THREADS", "2")
    assert worker_count(8) == 2
    assert worker_count(1) == 1
    monkeypatch.setenv("QSYNC_THREADS", "0")
    assert worker_count(4) == 1


def test_grid_shape_and_determinism(tmp_path):
    deltas, lams = [0.0, 0.02, 0.1], [0.0, 0.05]
    serial = arnold_tongue(SweepGrid(deltas, lams, SMALL), workers=1)
    pooled = arnold_tongue(SweepGrid(deltas[::-1], lams, SMALL), workers=2)
    assert serial.results.shape == (3, 2)
    for i, d in enumerate(deltas):
        for j in range(2):
            a, b = serial.results[i, j], pooled.results[2 - i, j]
            assert a.delta == d and b.delta == d
            np.testing.assert_array_equal([a.s_r_max, a.mutual_information], [b.s_r_max, b.mutual_information])
    # uncoupled: detuned coherences average out; at zero detuning nothing moves at all
    np.testing.assert_array_less(serial.field_map("s_r_max")[1:, 0], 1e-10)
    assert serial.results[0, 0].s_r_max == pytest.approx((4 + 9 * np.pi**2) / (256 * np.pi))
    assert not any(r.converged for r in serial.results[:, 0])
    thermal = arnold_tongue(SweepGrid(deltas, [0.0], CellConfig(m_cut=1, tier_cap=2, initial="diagonal_thermal")))
    assert np.all(thermal.field_map("s_r_max") == 0)
    assert np.all(serial.field_map("s_r_max")[:, 1] > 0)
    write_tongue_csv(tmp_path / "a.csv", serial)
    again = arnold_tongue(SweepGrid(deltas, lams, SMALL), workers=1)
    write_tongue_csv(tmp_path / "b.csv", again)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    rows = list(csv.reader(open(tmp_path / "a.csv")))
    assert rows[0] == TONGUE_COLUMNS and len(rows) == 7
    assert [float(r[0]) for r in rows[1:]] == [0.0, 0.0, 0.02, 0.02, 0.1, 0.1]
    assert rows[1][6] in ("true", "false")


def test_row_access_and_width():
    grid = arnold_tongue(SweepGrid([0.01, 0.05, 0.1], [0.0, 0.05], SMALL), workers=1)
    assert len(grid.row(0.05)) == 3
    with pytest.raises(KeyError):
        grid.row(0.03)
    assert 0 < row_width(grid, 0.05) <= 0.09 + 1e-12
    with pytest.raises(ValueError):
        SweepGrid([0.0], [0.0]).field_map("s_r_max")
    with pytest.raises(ValueError):
        arnold_tongue(SweepGrid([], [0.05], SMALL))


def test_warm_start_matches_cold():
    cold = arnold_tongue(SweepGrid([0.01, 0.05], [0.05], SMALL), workers=1)
    warm = arnold_tongue(SweepGrid([0.01, 0.05], [0.05], SMALL, warm_start=True))
    np.testing.assert_allclose(warm.field_map("s_r_max"), cold.field_map("s_r_max"), rtol=1e-7)


def test_default_grid():
    g = default_tongue_grid()
    assert len(g.delta_values) == 21 and len(g.lambda_values) == 21
    assert g.delta_values[-1] == 0.1 and g.lambda_values[-1] == 0.05


def test_temperature_scan_uncoupled():
    table, recs = temperature_scan([0.001, 0.1], [0.2, 1.0], CellConfig(lam=0.0, gamma=0.2, m_cut=1, tier_cap=2))
    assert table.shape == (2, 2) and recs.shape == (2, 2)
    assert np.all(table < 1e-10)
