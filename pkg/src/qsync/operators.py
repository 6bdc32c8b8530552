"""Spin-1 operators and the two-qutrit Hamiltonian / bath coupling.

Product basis ordering: index ``3*a + b`` (0-based) with ``a`` the first
qutrit and ``b`` the second, each running over m = +1, 0, -1 in that order.
In 1-based labels |+1,+1> is 1, |+1,-1> is 3 and |-1,+1> is 7.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

DIM = 3
DIM2 = DIM * DIM


class SpinMatrices(NamedTuple):
    jx: np.ndarray
    jy: np.ndarray
    jz: np.ndarray


def build_spin1() -> SpinMatrices:
    """Spin-1 matrices in the basis {|1,1>, |1,0>, |1,-1>} (hbar = 1)."""
    s = 1.0 / np.sqrt(2.0)
    jx = s * np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=complex)
    jy = s * np.array([[0, -1j, 0], [1j, 0, -1j], [0, 1j, 0]], dtype=complex)
    jz = np.diag([1.0, 0.0, -1.0]).astype(complex)
    for m in (jx, jy, jz):
        m.setflags(write=False)
    return SpinMatrices(jx, jy, jz)


def embed(op: np.ndarray, site: int) -> np.ndarray:
    """Lift a single-qutrit operator to the two-qutrit space (site 1 or 2)."""
    eye = np.eye(DIM)
    if site == 1:
        return np.kron(op, eye)
    if site == 2:
        return np.kron(eye, op)
    raise ValueError(f"site must be 1 or 2, got {site!r}")


def build_hamiltonian(omega1: float, delta: float) -> np.ndarray:
    """H_S = omega1 J1z + (omega1 + delta) J2z."""
    if not omega1 > 0:
        raise ValueError(f"omega1 must be positive, got {omega1!r}")
    jz = build_spin1().jz
    return omega1 * embed(jz, 1) + (omega1 + delta) * embed(jz, 2)


def build_coupling(h: float) -> np.ndarray:
    """V = (1+h)(J1z + J2z) + (1-h)(J1x + J2x) for an anisotropy -1 <= h <= 1."""
    if not -1.0 <= h <= 1.0:
        raise ValueError(f"anisotropy h must lie in [-1, 1], got {h!r}")
    spin = build_spin1()
    jz_tot = embed(spin.jz, 1) + embed(spin.jz, 2)
    jx_tot = embed(spin.jx, 1) + embed(spin.jx, 2)
    return (1.0 + h) * jz_tot + (1.0 - h) * jx_tot


@dataclass(frozen=True)
class SystemModel:
    """Two uncoupled qutrits: frequencies, detuning and bath-coupling anisotropy.

    ``hs`` and ``v`` are assembled on construction and made read-only.
    """

    delta: float
    h: float
    omega1: float = 1.0
    hs: np.ndarray = field(init=False, repr=False, compare=False)
    v: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        hs = build_hamiltonian(self.omega1, self.delta)
        v = build_coupling(self.h)
        hs.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "hs", hs)
        object.__setattr__(self, "v", v)

    @property
    def omega2(self) -> float:
        return self.omega1 + self.delta

    @property
    def energies(self) -> np.ndarray:
        return np.real(np.diag(self.hs))

    def free_propagator(self, t: float) -> np.ndarray:
        """exp(-i H_S t); exact because H_S is diagonal."""
        return np.diag(np.exp(-1j * self.energies * t))

    def gibbs_state(self, beta: float) -> np.ndarray:
        w = np.exp(-beta * (self.energies - self.energies.min()))
        return np.diag(w / w.sum()).astype(complex)
