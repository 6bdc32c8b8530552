"""Drude-Lorentz bath: spectral density, Matsubara expansion, terminator."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# relative distance |gamma - nu_k| / nu_k below which c_k is treated as a pole
DEGENERACY_TOL = 1e-9


class DegenerateBath(ValueError):
    """Bath parameters sit on a pole of the Matsubara coefficients."""


def _check_positive(**kwargs: float) -> None:
    for name, value in kwargs.items():
        if not (np.isfinite(value) and value > 0):
            raise ValueError(f"{name} must be positive and finite, got {value!r}")


def spectral_density(lam, gamma, omega):
    """J(w) = 2 lam gamma w / (pi (gamma^2 + w^2)); accepts arrays."""
    omega = np.asarray(omega, dtype=float)
    return 2.0 * lam * gamma * omega / (np.pi * (gamma**2 + omega**2))


def matsubara_frequencies(gamma: float, beta: float, m_cut: int) -> np.ndarray:
    """Decay rates [gamma, 2 pi/beta, ..., 2 pi M/beta]."""
    _check_positive(gamma=gamma, beta=beta)
    if m_cut < 0:
        raise ValueError(f"m_cut must be non-negative, got {m_cut!r}")
    nu = 2.0 * np.pi * np.arange(m_cut + 1) / beta
    nu[0] = gamma
    return nu


def matsubara_coefficients(lam: float, gamma: float, beta: float, m_cut: int) -> np.ndarray:
    """Amplitudes c_k of C(t) = sum_k c_k exp(-nu_k t).

    c_0 = gamma lam [cot(gamma beta / 2) - i] and
    c_k = 4 gamma lam nu_k / (beta (nu_k^2 - gamma^2)) for k >= 1.
    """
    if lam < 0:
        raise ValueError(f"coupling lambda must be non-negative, got {lam!r}")
    nu = matsubara_frequencies(gamma, beta, m_cut)

    x = gamma * beta / 2.0
    # cot(x) has poles at integer multiples of pi
    n_pi = np.round(x / np.pi)
    if n_pi >= 1 and abs(x - n_pi * np.pi) <= DEGENERACY_TOL * x:
        raise DegenerateBath(f"gamma*beta/2 = {x} is a multiple of pi; cot diverges")
    # the same condition as gamma hitting a Matsubara frequency, but check
    # the truncated set explicitly as well
    rel = np.abs(gamma - nu[1:]) / nu[1:]
    if np.any(rel < DEGENERACY_TOL):
        k = int(np.argmin(rel)) + 1
        raise DegenerateBath(f"gamma = {gamma} coincides with Matsubara frequency nu_{k}")

    c = np.empty(m_cut + 1, dtype=complex)
    c[0] = gamma * lam * (1.0 / np.tan(x) - 1j)
    nk = nu[1:]
    c[1:] = 4.0 * gamma * lam * nk / (beta * (nk**2 - gamma**2))
    return c


@dataclass(frozen=True)
class BathSpec:
    """Bath parameters plus the derived exponents, amplitudes and terminator."""

    lam: float
    gamma: float
    beta: float
    m_cut: int = 2
    nu: np.ndarray = field(init=False, repr=False, compare=False)
    c: np.ndarray = field(init=False, repr=False, compare=False)
    terminator: complex = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        nu = matsubara_frequencies(self.gamma, self.beta, self.m_cut)
        c = matsubara_coefficients(self.lam, self.gamma, self.beta, self.m_cut)
        nu.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "terminator", terminator_coefficient(self))

    def with_cutoff(self, m_cut: int) -> "BathSpec":
        return BathSpec(self.lam, self.gamma, self.beta, m_cut)


def terminator_coefficient(spec: BathSpec) -> complex:
    """Xi = 2 lam/(beta gamma) - i lam - sum_{k<=M} c_k / nu_k.

    This is the weight of the Markovian [V, [V, .]] closure standing in for
    the Matsubara terms beyond the cutoff; it vanishes as M grows.
    """
    return complex(
        2.0 * spec.lam / (spec.beta * spec.gamma) - 1j * spec.lam - np.sum(spec.c / spec.nu)
    )


def correlation_function(spec: BathSpec, t):
    """Truncated expansion C(t) = sum_k c_k exp(-nu_k t) for t >= 0."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("correlation_function is defined for t >= 0")
    return np.sum(spec.c[:, None] * np.exp(-np.outer(spec.nu, t.ravel())), axis=0).reshape(t.shape)
