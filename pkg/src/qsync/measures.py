"""Phase-locking and correlation measures for a two-qutrit density matrix.

S_r(phi) is the Husimi-Q weight of the relative phase phi = phi1 - phi2,
integrated over both polar angles and the common phase, minus the uniform
background 1/(2 pi).  The closed form in :func:`sync_measure_closed` uses the
descending-m product basis of :mod:`qsync.operators`;
:func:`sync_measure_quadrature` integrates the Q function directly and is
kept as an independent check of that closed form.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from qsync.operators import DIM, DIM2
from qsync.states import coherent_amplitudes

ENTROPY_FLOOR = 1e-12
NEGATIVE_EIG_TOL = 1e-8
_Q_NORM = 9.0 / (16.0 * np.pi**2)


class InvalidDensityMatrix(ValueError):
    pass


def check_density(rho, atol: float = 1e-8) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (DIM2, DIM2):
        raise InvalidDensityMatrix(f"expected a 9x9 matrix, got shape {rho.shape}")
    if np.abs(rho - rho.conj().T).max() > atol:
        raise InvalidDensityMatrix("matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > atol:
        raise InvalidDensityMatrix(f"trace is {np.trace(rho).real:.10g}, expected 1")
    return rho


@dataclass(frozen=True)
class SpinCoherentState:
    theta: float
    phi: float
    amplitudes: np.ndarray


def spin_coherent_state(theta: float, phi: float) -> SpinCoherentState:
    """|theta, phi> = exp(-i phi Jz) exp(-i theta Jy) |1, 1> for spin 1."""
    if not 0.0 <= theta <= np.pi:
        raise ValueError(f"theta must lie in [0, pi], got {theta!r}")
    if not 0.0 <= phi < 2 * np.pi:
        raise ValueError(f"phi must lie in [0, 2 pi), got {phi!r}")
    return SpinCoherentState(theta, phi, coherent_amplitudes(theta, phi))


def husimi_q(rho, theta1: float, theta2: float, phi1: float, phi2: float) -> float:
    """Two-spin Husimi function (9 / 16 pi^2) <theta1,phi1; theta2,phi2| rho |...>."""
    rho = check_density(rho)
    psi = np.kron(coherent_amplitudes(theta1, phi1), coherent_amplitudes(theta2, phi2))
    return float(_Q_NORM * np.real(psi.conj() @ rho @ psi))


def sync_measure_closed(rho, phi):
    """S_r(phi) from the density-matrix elements it depends on.

    S_r = (32 xi + 9 pi^2 eta) / (256 pi) with
    xi  = e^{2i phi} rho_37 + c.c. and
    eta = e^{i phi} (rho_24 + rho_35 + rho_57 + rho_68) + c.c.
    (1-based labels).  Accepts scalar or array ``phi``.
    """
    rho = check_density(rho)
    r = lambda j, k: rho[j - 1, k - 1]  # noqa: E731
    phi = np.asarray(phi, dtype=float)
    a2 = r(3, 7)
    a1 = r(2, 4) + r(3, 5) + r(5, 7) + r(6, 8)
    xi = 2.0 * np.real(np.exp(2j * phi) * a2)
    eta = 2.0 * np.real(np.exp(1j * phi) * a1)
    out = (32.0 * xi + 9.0 * np.pi**2 * eta) / (256.0 * np.pi)
    return float(out) if out.ndim == 0 else out


def sync_measure_quadrature(rho, phi, n_theta: int = 256, n_phi: int = 16):
    """S_r(phi) by direct product quadrature of the Husimi function.

    Gauss-Legendre nodes in cos(theta1) and cos(theta2), uniform nodes in the
    common phase phi2 (the integrand is a trigonometric polynomial of degree
    two there, so ``n_phi >= 8`` is exact in that direction).
    """
    if n_theta < 2 or n_phi < 8:
        raise ValueError("quadrature needs n_theta >= 2 and n_phi >= 8")
    rho = check_density(rho)
    u, w = np.polynomial.legendre.leggauss(n_theta)
    theta = np.arccos(u)
    phis2 = 2 * np.pi * np.arange(n_phi) / n_phi
    w_phi = 2 * np.pi / n_phi
    r4 = rho.reshape(DIM, DIM, DIM, DIM)

    def one(ph: float) -> float:
        # amplitudes of spin 1 at (theta1, phi + phi2) and spin 2 at (theta2, phi2)
        a1 = coherent_amplitudes(theta[:, None], (ph + phis2)[None, :])  # (3, nt, nphi)
        a2 = coherent_amplitudes(theta[:, None], phis2[None, :])
        q = np.einsum(
            "aip,bjp,abcd,cip,djp->ijp", a1.conj(), a2.conj(), r4, a1, a2, optimize=True
        ).real
        total = np.einsum("i,j,ijp->", w, w, q) * w_phi
        return float(_Q_NORM * total - 1.0 / (2 * np.pi))

    phi = np.asarray(phi, dtype=float)
    if phi.ndim == 0:
        return one(float(phi))
    return np.array([one(float(p)) for p in phi.ravel()]).reshape(phi.shape)


def max_sync(rho, n_samples: int = 1024, xtol: float = 1e-9) -> tuple[float, float]:
    """Maximum of S_r over phi and the phase where it is attained.

    S_r is a degree-two trigonometric polynomial, so a dense grid followed by
    golden-section refinement around the best node finds the global maximum.
    The phase is reported in (-pi, pi].  Returns (0.0, 0.0) when S_r
    vanishes identically.
    """
    if n_samples < 8:
        raise ValueError("need at least 8 phase samples")
    rho = check_density(rho)
    grid = 2 * np.pi * np.arange(n_samples) / n_samples
    vals = sync_measure_closed(rho, grid)
    if np.max(np.abs(vals)) == 0.0:
        return 0.0, 0.0
    i = int(np.argmax(vals))
    step = grid[1]
    neg = lambda p: -sync_measure_closed(rho, p)  # noqa: E731
    try:
        phi = optimize.golden(neg, brack=(grid[i] - step, grid[i], grid[i] + step), tol=xtol)
    except (ValueError, RuntimeError):
        phi = grid[i]
    best = -neg(phi)
    if best < vals[i]:
        phi, best = grid[i], vals[i]
    return float(best), float(np.angle(np.exp(1j * phi)))


def partial_transpose(rho, subsystem: int = 2) -> np.ndarray:
    """Transpose the indices of one tensor factor (1 or 2)."""
    rho = np.asarray(rho, dtype=complex)
    r = rho.reshape(DIM, DIM, DIM, DIM)
    if subsystem == 1:
        r = r.transpose(2, 1, 0, 3)
    elif subsystem == 2:
        r = r.transpose(0, 3, 2, 1)
    else:
        raise ValueError(f"subsystem must be 1 or 2, got {subsystem!r}")
    return r.reshape(DIM2, DIM2)


def negativity_measures(rho) -> tuple[float, float]:
    """Negativity N and logarithmic negativity E = log2(1 + 2N).

    N is the magnitude of the summed negative eigenvalues of the partial
    transpose, i.e. (||rho^T||_1 - 1) / 2 for unit trace.
    """
    rho = check_density(rho)
    pt = partial_transpose(rho, 2)
    ev = np.linalg.eigvalsh(0.5 * (pt + pt.conj().T))
    n = max(0.0, float(-ev[ev < 0].sum()))
    return n, float(np.log2(1.0 + 2.0 * n))


def partial_trace(rho, keep: int) -> np.ndarray:
    """Reduced 3x3 state of qutrit ``keep`` (1 or 2)."""
    r = np.asarray(rho, dtype=complex).reshape(DIM, DIM, DIM, DIM)
    if keep == 1:
        return np.einsum("ajbj->ab", r)
    if keep == 2:
        return np.einsum("jajb->ab", r)
    raise ValueError(f"keep must be 1 or 2, got {keep!r}")


def von_neumann_entropy(rho) -> float:
    """-tr(rho ln rho); eigenvalues below 1e-12 count as zero.

    Eigenvalues below -1e-8 are a genuine positivity violation and raise.
    """
    rho = np.asarray(rho, dtype=complex)
    ev = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if ev.min() < -NEGATIVE_EIG_TOL:
        raise InvalidDensityMatrix(f"negative eigenvalue {ev.min():.3e} in entropy")
    ev = ev[ev > ENTROPY_FLOOR]
    return float(-(ev * np.log(ev)).sum())


def mutual_information(rho) -> float:
    """I = S(rho_1) + S(rho_2) - S(rho) in nats."""
    rho = check_density(rho)
    return (
        von_neumann_entropy(partial_trace(rho, 1))
        + von_neumann_entropy(partial_trace(rho, 2))
        - von_neumann_entropy(rho)
    )


@dataclass
class MeasureReport:
    phi_grid: np.ndarray
    s_r: np.ndarray
    s_r_max: float
    phi_star: float
    negativity: float
    log_negativity: float
    mutual_information: float


def measure_report(rho, n_phi: int = 256) -> MeasureReport:
    rho = check_density(rho)
    grid = 2 * np.pi * np.arange(n_phi) / n_phi
    smax, phi_star = max_sync(rho)
    n, e = negativity_measures(rho)
    return MeasureReport(
        grid, sync_measure_closed(rho, grid), smax, phi_star, n, e, mutual_information(rho)
    )


MEASURE_COLUMNS = ["t", "s_r_max", "phi_star", "negativity", "log_negativity", "mutual_information"]


def write_measures_csv(path, times, reports) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(MEASURE_COLUMNS)
        for t, r in zip(times, reports):
            vals = (t, r.s_r_max, r.phi_star, r.negativity, r.log_negativity, r.mutual_information)
            w.writerow([format(float(v), ".17g") for v in vals])


def write_curve_csv(path, report: MeasureReport) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["phi", "s_r"])
        for p, s in zip(report.phi_grid, report.s_r):
            w.writerow([format(float(p), ".17g"), format(float(s), ".17g")])
