"""Initial-state presets for the two-qutrit register."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from qsync.operators import DIM2, SystemModel

PRESETS = ("equatorial_product", "diagonal_thermal", "ground", "custom")


def coherent_amplitudes(theta, phi) -> np.ndarray:
    """Spin-1 coherent-state amplitudes on (|1,1>, |1,0>, |1,-1>).

    Broadcasts over array arguments; the component axis comes first.
    """
    theta, phi = np.broadcast_arrays(np.asarray(theta, dtype=float), np.asarray(phi, dtype=float))
    c = np.cos(theta)
    return np.stack(
        [np.exp(-1j * phi) * (1 + c) / 2, np.sin(theta) / np.sqrt(2) + 0j, np.exp(1j * phi) * (1 - c) / 2]
    )


def equatorial_product(phi1: float = 0.0, phi2: float = 0.0) -> np.ndarray:
    """|pi/2, phi1> (x) |pi/2, phi2> as a density matrix."""
    psi = np.kron(coherent_amplitudes(np.pi / 2, phi1), coherent_amplitudes(np.pi / 2, phi2))
    return np.outer(psi, psi.conj())


def ground() -> np.ndarray:
    """|-1,-1><-1,-1|, the lowest level of H_S for positive frequencies."""
    rho = np.zeros((DIM2, DIM2), dtype=complex)
    rho[-1, -1] = 1.0
    return rho


def load_matrix(path: str | Path) -> np.ndarray:
    """Read a 9x9 matrix from text: real rows, or ``re im`` pairs per entry."""
    data = np.loadtxt(path, dtype=float, ndmin=2)
    if data.shape == (DIM2, DIM2):
        return data.astype(complex)
    if data.shape == (DIM2, 2 * DIM2):
        return data[:, 0::2] + 1j * data[:, 1::2]
    raise ValueError(f"{path}: expected 9x9 real or 9x18 re/im columns, got {data.shape}")


def initial_state(preset: str, model: SystemModel | None = None, beta: float | None = None,
                  path: str | Path | None = None) -> np.ndarray:
    if preset == "equatorial_product":
        return equatorial_product()
    if preset == "diagonal_thermal":
        if model is None or beta is None:
            raise ValueError("diagonal_thermal needs the system model and beta")
        return model.gibbs_state(beta)
    if preset == "ground":
        return ground()
    if preset == "custom":
        if path is None:
            raise ValueError("custom initial state needs a matrix file")
        return load_matrix(path)
    raise ValueError(f"unknown initial-state preset {preset!r}; choose from {PRESETS}")
