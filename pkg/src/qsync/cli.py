"""Command-line frontend: ``qsync {evolve,steady,sweep,check}``.

Exit status is 0 on success, 1 on a hard error (bad config, integration
failure) and 2 when the run completed but a steady state did not converge.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from qsync.config import ConfigError, RunConfig, dump_config, load_config
from qsync.heom import (
    convergence_study,
    evolve,
    hierarchy_space,
    stationary_state,
    steady_state,
    write_trajectory_csv,
)
from qsync.measures import measure_report, write_curve_csv, write_measures_csv
from qsync.states import initial_state
from qsync.sweep import (
    SweepGrid,
    arnold_tongue,
    row_width,
    write_tongue_csv,
)

log = logging.getLogger("qsync")

EXIT_OK, EXIT_ERROR, EXIT_UNCONVERGED = 0, 1, 2


def _stamp() -> str:
    return time.strftime("%Y%m%d-%H%M%S")


def _outdir(cfg: RunConfig) -> Path:
    d = Path(cfg.output.directory)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _svg_path(cfg: RunConfig, command: str, out: str | None) -> Path:
    return Path(out) if out else _outdir(cfg) / f"{command}_{_stamp()}.svg"


def _setup(cfg: RunConfig):
    cell = cfg.cell()
    model, bath = cell.model(), cell.bath()
    space = hierarchy_space(bath, cell.tier_cap, cell.channel_count)
    rho0 = initial_state(cell.initial, model, cell.beta, cell.initial_path)
    return model, bath, space, rho0


def cmd_evolve(cfg: RunConfig, out: str | None = None) -> int:
    model, bath, space, rho0 = _setup(cfg)
    n = cfg.numerics
    traj = evolve(rho0, model, bath, space, dt=n.dt, t_final=n.t_final, sample_every=n.sample_every)
    reports = [measure_report(r, cfg.measures.n_phi) for r in traj.rho]
    d = _outdir(cfg)
    write_trajectory_csv(d / "trajectory.csv", traj)
    write_measures_csv(d / "measures.csv", traj.times, reports)
    if cfg.output.plot:
        from qsync.measures import sync_measure_closed
        from qsync.plots import plot_time_series

        plot_time_series(
            _svg_path(cfg, "evolve", out),
            traj.times,
            {
                "E": np.array([r.log_negativity for r in reports]),
                "I": np.array([r.mutual_information for r in reports]),
                r"$S_r(0)$": np.array([sync_measure_closed(r, 0.0) for r in traj.rho]),
            },
        )
    print(f"wrote {len(traj)} samples to {d}")
    return EXIT_OK


SUMMARY_COLUMNS = [
    "delta", "lambda", "gamma", "beta", "h", "s_r_max", "phi_star",
    "negativity", "log_negativity", "mutual_information", "converged", "t_reached",
]


def cmd_steady(cfg: RunConfig, out: str | None = None) -> int:
    model, bath, space, rho0 = _setup(cfg)
    n, p = cfg.numerics, cfg.physical
    if n.steady_method == "stationary":
        res = stationary_state(model, bath, space, initial=rho0)
    else:
        res = steady_state(
            model, bath, space, rho0, dt=n.dt, tolerance=n.steady_tolerance,
            window=n.steady_window, max_time=n.steady_max_time,
        )
    rep = measure_report(res.rho, cfg.measures.n_phi)
    d = _outdir(cfg)
    write_curve_csv(d / "steady_curve.csv", rep)
    with open(d / "steady_summary.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SUMMARY_COLUMNS)
        nums = (p.delta, p.lam, p.gamma, p.beta, p.h, rep.s_r_max, rep.phi_star,
                rep.negativity, rep.log_negativity, rep.mutual_information)
        w.writerow([format(float(v), ".17g") for v in nums]
                   + [str(res.converged).lower(), format(float(res.t_reached), ".17g")])
    pairs = np.empty((9, 18))
    pairs[:, 0::2], pairs[:, 1::2] = res.rho.real, res.rho.imag
    np.savetxt(d / "steady_rho.txt", pairs, fmt="%.17g", header="re im pairs per entry, row-major")
    if cfg.output.plot:
        from qsync.plots import plot_curve

        plot_curve(_svg_path(cfg, "steady", out), rep.phi_grid, rep.s_r)
    print(f"s_r_max = {rep.s_r_max:.6g} at phi = {rep.phi_star:.6g}, converged = {res.converged}")
    return EXIT_OK if res.converged else EXIT_UNCONVERGED


def cmd_sweep(cfg: RunConfig, out: str | None = None, workers: int | None = None) -> int:
    s = cfg.sweep
    grid = SweepGrid(
        np.linspace(s.delta_min, s.delta_max, s.n_delta),
        np.linspace(s.lambda_min, s.lambda_max, s.n_lambda),
        cfg.cell(),
        warm_start=s.warm_start,
    )
    grid = arnold_tongue(grid, workers=workers, progress=True)
    d = _outdir(cfg)
    write_tongue_csv(d / "tongue.csv", grid)
    if cfg.output.plot:
        from qsync.plots import plot_heatmaps

        plot_heatmaps(
            _svg_path(cfg, "sweep", out), grid.delta_values, grid.lambda_values,
            {r"max $S_r$": grid.field_map("s_r_max"), "I": grid.field_map("mutual_information")},
        )
    recs = list(grid.results.ravel())
    failed = [r for r in recs if r.error is not None]
    unconverged = [r for r in recs if r.error is None and not r.converged]
    lam_top = float(grid.lambda_values[-1])
    try:
        print(f"tongue width at lambda = {lam_top:g}: {row_width(grid, lam_top, s.width_threshold):.6g}")
    except ValueError as exc:
        print(f"tongue width at lambda = {lam_top:g} undefined: {exc}")
    print(f"{len(recs)} cells, {len(failed)} failed, {len(unconverged)} unconverged")
    if failed:
        return EXIT_ERROR
    return EXIT_UNCONVERGED if unconverged else EXIT_OK


CHECK_COLUMNS = ["m_cut", "tier_cap", "s_r_max", "difference", "relative", "converged_pair"]


def cmd_check(cfg: RunConfig) -> int:
    cell = cfg.cell()
    rho0 = initial_state(cell.initial, cell.model(), cell.beta, cell.initial_path)
    pairs = [tuple(p) for p in cfg.check.pairs]
    table = convergence_study(cell.model(), cell.bath(), pairs, channel_count=cell.channel_count,
                              initial=rho0)
    flagged = table.converged_pair(cfg.check.tolerance)
    d = _outdir(cfg)
    with open(d / "convergence.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CHECK_COLUMNS)
        for pair, v, diff, rel in zip(table.pairs, table.values, table.differences, table.relative):
            w.writerow([pair[0], pair[1]] + [format(float(x), ".17g") for x in (v, diff, rel)]
                       + [str(pair == flagged).lower()])
    print(f"converged pair: {flagged}")
    return EXIT_OK if flagged is not None else EXIT_UNCONVERGED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qsync", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in [
        ("evolve", "integrate the hierarchy and write trajectory and measure CSVs"),
        ("steady", "steady state, its S_r(phi) curve and summary"),
        ("sweep", "Arnold-tongue grid over (delta, lambda)"),
        ("check", "truncation convergence table"),
    ]:
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", help="TOML run configuration")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="SECTION.KEY=VALUE", help="override one config value")
        p.add_argument("--out", help="SVG output path")
        p.add_argument("--no-plot", action="store_true", help="skip SVG output")
        p.add_argument("--dump-config", action="store_true",
                       help="print the resolved config as TOML and exit")
        if name == "sweep":
            p.add_argument("--workers", type=int, help="process count (capped by QSYNC_THREADS)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args.overrides)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if args.no_plot:
        cfg = replace(cfg, output=replace(cfg.output, plot=False))
    if args.dump_config:
        sys.stdout.write(dump_config(cfg))
        return EXIT_OK
    try:
        if args.command == "evolve":
            return cmd_evolve(cfg, args.out)
        if args.command == "steady":
            return cmd_steady(cfg, args.out)
        if args.command == "sweep":
            return cmd_sweep(cfg, args.out, args.workers)
        return cmd_check(cfg)
    except Exception as exc:
        log.debug("failure", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
