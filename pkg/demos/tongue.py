"""A small Arnold-tongue map over detuning and coupling.

Sweeps a coarse (delta, lambda) grid, prints the peak synchronization of
every cell and the half-maximum width of the top coupling row.  Cells at
zero detuning or zero coupling have no unique stationary state and are
marked with '*'.

Run: python3 demos/tongue.py
"""

import numpy as np

from qsync.sweep import CellConfig, SweepGrid, arnold_tongue, row_width


def main() -> None:
    grid = SweepGrid(np.linspace(0.0, 0.1, 6), np.linspace(0.0, 0.05, 3), CellConfig(gamma=0.2))
    grid = arnold_tongue(grid, workers=1)
    print("delta   " + "".join(f"lam={l:<10.3f}" for l in grid.lambda_values))
    for i, d in enumerate(grid.delta_values):
        cells = "".join(
            f"{r.s_r_max:<10.4f}{'*' if not r.converged else ' '}   " for r in grid.results[i]
        )
        print(f"{d:<8.3f}{cells}")
    lam = float(grid.lambda_values[-1])
    print(f"width at lambda = {lam:g}: {row_width(grid, lam):.3f}")


if __name__ == "__main__":
    main()
