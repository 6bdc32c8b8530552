"""Steady-state parameter sweeps: Arnold-tongue maps and temperature scans.

Cells are independent; with more than one worker they run in a process
pool and land in pre-sized slots, so results do not depend on completion
order.  ``QSYNC_THREADS`` caps the worker count.
"""

from __future__ import annotations

import csv
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from qsync.bath import BathSpec
from qsync.heom import hierarchy_space, stationary_state, steady_state
from qsync.measures import InvalidDensityMatrix, max_sync, mutual_information, negativity_measures
from qsync.operators import SystemModel
from qsync.states import initial_state

log = logging.getLogger(__name__)

TONGUE_COLUMNS = [
    "delta", "lambda", "s_r_max", "phi_star", "mutual_information",
    "log_negativity", "converged", "t_reached",
]


class ZeroReference(ValueError):
    """The reference (smallest |delta|) cell of a row has no synchronization."""


@dataclass(frozen=True)
class CellConfig:
    """Everything needed to compute one steady state."""

    delta: float = 0.01
    lam: float = 0.05
    gamma: float = 2.0
    beta: float = 0.3
    h: float = -1.0
    m_cut: int = 2
    tier_cap: int = 6
    channel_count: int = 2
    initial: str = "equatorial_product"
    initial_path: str | None = None
    method: str = "stationary"
    dt: float = 0.005
    tolerance: float = 1e-6
    window: float = 50.0
    max_time: float = 2000.0

    def model(self) -> SystemModel:
        return SystemModel(self.delta, self.h)

    def bath(self) -> BathSpec:
        return BathSpec(self.lam, self.gamma, self.beta, self.m_cut)


@dataclass
class CellRecord:
    delta: float
    lam: float
    s_r_max: float = math.nan
    phi_star: float = math.nan
    mutual_information: float = math.nan
    log_negativity: float = math.nan
    converged: bool = False
    t_reached: float = math.nan
    error: str | None = None
    rho: np.ndarray | None = field(default=None, repr=False)


def solve_cell(cfg: CellConfig, rho0: np.ndarray | None = None) -> CellRecord:
    """Steady state and its measures for one parameter set; never raises."""
    rec = CellRecord(cfg.delta, cfg.lam)
    try:
        model = cfg.model()
        bath = cfg.bath()
        space = hierarchy_space(bath, cfg.tier_cap, cfg.channel_count)
        if rho0 is None:
            rho0 = initial_state(cfg.initial, model, cfg.beta, cfg.initial_path)
        if cfg.method == "stationary":
            res = stationary_state(model, bath, space, initial=rho0)
        elif cfg.method == "evolve":
            res = steady_state(
                model, bath, space, rho0, dt=cfg.dt, tolerance=cfg.tolerance,
                window=cfg.window, max_time=cfg.max_time,
            )
        else:
            raise ValueError(f"unknown steady-state method {cfg.method!r}")
        rec.rho = res.rho
        rec.converged = res.converged
        rec.t_reached = res.t_reached
        rec.s_r_max, rec.phi_star = max_sync(res.rho)
        rec.log_negativity = negativity_measures(res.rho)[1]
        try:
            rec.mutual_information = mutual_information(res.rho)
        except InvalidDensityMatrix:
            # a non-unique limit can sit just outside the physical set
            if res.converged:
                raise
            log.info("cell delta=%g lambda=%g: entropy undefined for unconverged state", cfg.delta, cfg.lam)
    except Exception as exc:  # recorded per cell; the sweep carries on
        rec.converged = False
        rec.error = f"{type(exc).__name__}: {exc}"
        log.warning("cell delta=%g lambda=%g failed: %s", cfg.delta, cfg.lam, rec.error)
    return rec


def worker_count(requested: int | None = None) -> int:
    n = requested or os.cpu_count() or 1
    cap = os.environ.get("QSYNC_THREADS")
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


def _run_cells(cfgs: list[CellConfig], workers: int | None, progress: bool) -> list[CellRecord]:
    n = worker_count(workers)
    out: list[CellRecord | None] = [None] * len(cfgs)
    if n == 1 or len(cfgs) == 1:
        for i, c in enumerate(cfgs):
            out[i] = solve_cell(c)
            if progress:
                print(f"\rcell {i + 1}/{len(cfgs)}", end="", file=sys.stderr, flush=True)
    else:
        with ProcessPoolExecutor(max_workers=n) as pool:
            futures = {pool.submit(solve_cell, c): i for i, c in enumerate(cfgs)}
            for done, fut in enumerate(as_completed(futures), 1):
                out[futures[fut]] = fut.result()
                if progress:
                    print(f"\rcell {done}/{len(cfgs)}", end="", file=sys.stderr, flush=True)
    if progress:
        print(file=sys.stderr)
    return out  # type: ignore[return-value]


@dataclass
class SweepGrid:
    delta_values: np.ndarray
    lambda_values: np.ndarray
    fixed: CellConfig = field(default_factory=CellConfig)
    warm_start: bool = False
    results: np.ndarray | None = None  # object array of CellRecord, (n_delta, n_lambda)

    def field_map(self, name: str) -> np.ndarray:
        if self.results is None:
            raise ValueError("grid has not been run")
        return np.vectorize(lambda r: getattr(r, name), otypes=[float])(self.results)

    def row(self, lam: float) -> list[CellRecord]:
        """Records at fixed coupling ``lam`` across all detunings."""
        j = int(np.argmin(np.abs(np.asarray(self.lambda_values) - lam)))
        if not np.isclose(self.lambda_values[j], lam):
            raise KeyError(f"lambda = {lam} is not on the grid")
        return list(self.results[:, j])


def default_tongue_grid(fixed: CellConfig | None = None, n: int = 21) -> SweepGrid:
    return SweepGrid(np.linspace(0.0, 0.1, n), np.linspace(0.0, 0.05, n), fixed or CellConfig())


def arnold_tongue(
    grid: SweepGrid, workers: int | None = None, progress: bool = False
) -> SweepGrid:
    """Fill ``grid.results`` with one steady-state record per (delta, lambda)."""
    deltas = np.asarray(grid.delta_values, dtype=float)
    lams = np.asarray(grid.lambda_values, dtype=float)
    if deltas.size == 0 or lams.size == 0:
        raise ValueError("sweep grid is empty")
    cfgs = [replace(grid.fixed, delta=float(d), lam=float(l)) for d in deltas for l in lams]
    if grid.warm_start:
        records = []
        prev = None
        for c in cfgs:
            rec = solve_cell(c, prev)
            records.append(rec)
            if rec.rho is not None and rec.error is None:
                prev = rec.rho
    else:
        records = _run_cells(cfgs, workers, progress)
    res = np.empty((deltas.size, lams.size), dtype=object)
    for k, rec in enumerate(records):
        res[k // lams.size, k % lams.size] = rec
    return replace(grid, delta_values=deltas, lambda_values=lams, results=res)


def tongue_width(deltas: Sequence[float], s_r_max: Sequence[float], threshold: float = 0.5) -> float:
    """Length of the detuning interval where s_r_max >= threshold * reference.

    The reference is the value at the smallest |delta|.  Crossings between
    samples are located by linear interpolation.
    """
    d = np.asarray(deltas, dtype=float)
    s = np.asarray(s_r_max, dtype=float)
    keep = np.isfinite(d) & np.isfinite(s)
    d, s = d[keep], s[keep]
    if d.size == 0:
        raise ValueError("no finite cells in row")
    ref = s[np.argmin(np.abs(d))]
    if not ref > 0:
        raise ZeroReference(f"reference s_r_max is {ref!r}")
    order = np.argsort(d)
    d, s = d[order], s[order]
    level = threshold * ref
    if d.size == 1:
        return 0.0
    width = 0.0
    for a, b, sa, sb in zip(d[:-1], d[1:], s[:-1], s[1:]):
        ia, ib = sa >= level, sb >= level
        if ia and ib:
            width += b - a
        elif ia or ib:
            x = a + (level - sa) * (b - a) / (sb - sa)
            width += (x - a) if ia else (b - x)
    return float(width)


def row_width(grid: SweepGrid, lam: float, threshold: float = 0.5) -> float:
    """tongue_width over the converged cells of one coupling row."""
    cells = [r for r in grid.row(lam) if r.converged and r.error is None]
    return tongue_width([r.delta for r in cells], [r.s_r_max for r in cells], threshold)


def temperature_scan(
    deltas: Sequence[float],
    betas: Sequence[float],
    fixed: CellConfig | None = None,
    workers: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Steady-state s_r_max for every (delta, beta); also returns the records."""
    fixed = fixed or CellConfig(gamma=0.2, lam=0.05, h=-1.0)
    cfgs = [replace(fixed, delta=float(d), beta=float(b)) for d in deltas for b in betas]
    records = _run_cells(cfgs, workers, progress=False)
    table = np.array([r.s_r_max for r in records]).reshape(len(deltas), len(betas))
    recs = np.empty(table.shape, dtype=object)
    for k, r in enumerate(records):
        recs[k // len(betas), k % len(betas)] = r
    return table, recs


def write_tongue_csv(path, grid: SweepGrid) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TONGUE_COLUMNS)
        for i in range(len(grid.delta_values)):
            for j in range(len(grid.lambda_values)):
                r = grid.results[i, j]
                nums = (r.delta, r.lam, r.s_r_max, r.phi_star, r.mutual_information, r.log_negativity)
                w.writerow(
                    [format(float(v), ".17g") for v in nums]
                    + [str(bool(r.converged)).lower(), format(float(r.t_reached), ".17g")]
                )
