"""Hierarchical equations of motion for two qutrits in a common bath.

Each auxiliary density operator (ADO) rho^n is labelled by a multi-index n
over ``K = L * (M + 1)`` channels: ``L`` coupling labels (mu = 1..L) times
``M + 1`` Matsubara exponents.  Channel ``j`` carries the label
``mu = j // (M + 1) + 1`` and the exponent ``k = j % (M + 1)``.  The
hierarchy is truncated at total tier ``sum(n) <= tier_cap``; neighbours
outside the truncation read as zero.

All coupling labels share the same operator V and the same (nu_k, c_k), so
rho^n depends on n only through the per-exponent totals
``m_k = sum_mu n_{mu k}``.  :class:`HeomGenerator` exploits this by
propagating the collapsed hierarchy over ``M + 1`` channels with amplitudes
``L c_k`` and terminator ``L Xi``; this is exact, not an approximation, and
``HeomGenerator.expand`` recovers the ADOs of the full index space.
"""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from qsync.bath import BathSpec
from qsync.operators import DIM2, SystemModel

log = logging.getLogger(__name__)

DEFAULT_DT = 0.005
DEFAULT_TOLERANCE = 1e-6
DEFAULT_WINDOW = 50.0
DEFAULT_MAX_TIME = 2000.0


class NonFiniteState(FloatingPointError):
    """The integrated hierarchy produced inf/nan entries (step size too large)."""


class InvalidInitialState(ValueError):
    pass


class MaxTimeExceeded(RuntimeError):
    """Steady-state search hit its time limit; ``best`` holds the last estimate."""

    def __init__(self, message: str, best: "SteadyState") -> None:
        super().__init__(message)
        self.best = best


# ---------------------------------------------------------------------------
# index space


def _compositions(n_channels: int, cap: int) -> Iterator[tuple[int, ...]]:
    # lexicographic order over tuples with sum <= cap
    if n_channels == 1:
        for v in range(cap + 1):
            yield (v,)
        return
    for v in range(cap + 1):
        for rest in _compositions(n_channels - 1, cap - v):
            yield (v,) + rest


@dataclass(frozen=True)
class HierarchySpace:
    """Truncated multi-index set with O(1) raise/lower neighbour tables.

    ``raise_table[i, j]`` is the position of ``indices[i] + e_j`` or -1 when
    that index lies outside the truncation; ``lower_table`` likewise for
    ``indices[i] - e_j`` (-1 when the component is already zero).
    """

    n_channels: int
    tier_cap: int
    indices: np.ndarray = field(repr=False)
    raise_table: np.ndarray = field(repr=False)
    lower_table: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.indices.shape[0]

    @property
    def tiers(self) -> np.ndarray:
        return self.indices.sum(axis=1)

    def position(self, n: Sequence[int]) -> int:
        n = tuple(int(v) for v in n)
        if len(n) != self.n_channels:
            raise ValueError(f"multi-index must have {self.n_channels} entries")
        hits = np.flatnonzero((self.indices == n).all(axis=1))
        if hits.size == 0:
            raise KeyError(f"{n} is outside the truncation")
        return int(hits[0])


def enumerate_indices(n_channels: int, tier_cap: int) -> HierarchySpace:
    """All multi-indices over ``n_channels`` with total at most ``tier_cap``."""
    if n_channels < 1:
        raise ValueError(f"need at least one channel, got {n_channels!r}")
    if tier_cap < 0:
        raise ValueError(f"tier_cap must be non-negative, got {tier_cap!r}")
    idx = list(_compositions(n_channels, tier_cap))
    pos = {n: i for i, n in enumerate(idx)}
    up = np.full((len(idx), n_channels), -1, dtype=np.int64)
    down = np.full((len(idx), n_channels), -1, dtype=np.int64)
    for i, n in enumerate(idx):
        for j in range(n_channels):
            nj = list(n)
            nj[j] += 1
            up[i, j] = pos.get(tuple(nj), -1)
            if n[j] > 0:
                nj[j] -= 2
                down[i, j] = pos[tuple(nj)]
    indices = np.array(idx, dtype=np.int64)
    for a in (indices, up, down):
        a.setflags(write=False)
    return HierarchySpace(n_channels, tier_cap, indices, up, down)


def hierarchy_space(bath: BathSpec, tier_cap: int, channel_count: int = 2) -> HierarchySpace:
    """Index space for ``channel_count`` coupling labels times M+1 exponents."""
    if channel_count not in (1, 2):
        raise ValueError(f"channel_count must be 1 or 2, got {channel_count!r}")
    return enumerate_indices(channel_count * (bath.m_cut + 1), tier_cap)


@dataclass
class HierarchyState:
    ados: np.ndarray
    time: float = 0.0

    @property
    def rho(self) -> np.ndarray:
        return self.ados[0]


# ---------------------------------------------------------------------------
# generator


def _coupling_labels(bath: BathSpec, space: HierarchySpace) -> int:
    per_label = bath.m_cut + 1
    if space.n_channels % per_label:
        raise ValueError(
            f"space has {space.n_channels} channels, not a multiple of M+1 = {per_label}"
        )
    return space.n_channels // per_label


class HeomGenerator:
    """Linear HEOM generator for a fixed model, bath and truncation.

    The working hierarchy is the collapsed one (see module docstring) unless
    ``reduce=False``, in which case every multi-index of ``space`` is
    propagated as printed.  ADO arrays have shape ``(n_ados, 9, 9)``.
    """

    def __init__(
        self,
        model: SystemModel,
        bath: BathSpec,
        space: HierarchySpace,
        reduce: bool = True,
    ) -> None:
        self.model = model
        self.bath = bath
        self.space = space
        self.labels = _coupling_labels(bath, space)
        self.reduced = reduce and self.labels > 1
        if self.reduced:
            self.work_space = enumerate_indices(bath.m_cut + 1, space.tier_cap)
            nu = np.asarray(bath.nu, dtype=float)
            c = self.labels * np.asarray(bath.c)
        else:
            self.work_space = space
            nu = np.tile(bath.nu, self.labels)
            c = np.tile(bath.c, self.labels)
        self.xi = self.labels * bath.terminator
        self.nu = nu
        self.c = c

        hs = model.hs
        if np.count_nonzero(hs - np.diag(np.diag(hs))):
            raise ValueError("system Hamiltonian must be diagonal in the product basis")
        e = np.real(np.diag(hs))
        self._v = np.ascontiguousarray(model.v)
        ws = self.work_space
        self._decay = ws.indices @ nu
        # -i[H, .] - (sum n nu) acting elementwise, per ADO
        self._free = -1j * (e[:, None] - e[None, :])[None, :, :] - self._decay[:, None, None]

        n = ws.size
        rows_up, cols_up = np.nonzero(ws.raise_table >= 0)
        self._raise = sp.csr_matrix(
            (np.ones(rows_up.size), (rows_up, ws.raise_table[rows_up, cols_up])), shape=(n, n)
        )
        rows_dn, ch_dn = np.nonzero(ws.lower_table >= 0)
        weight = ws.indices[rows_dn, ch_dn] * c[ch_dn]
        src = ws.lower_table[rows_dn, ch_dn]
        self._lower_left = sp.csr_matrix((weight, (rows_dn, src)), shape=(n, n))
        self._lower_right = sp.csr_matrix((np.conj(weight), (rows_dn, src)), shape=(n, n))

    @property
    def size(self) -> int:
        return self.work_space.size

    @property
    def max_rate(self) -> float:
        return float(np.max(self.bath.nu))

    def zeros(self) -> np.ndarray:
        return np.zeros((self.size, DIM2, DIM2), dtype=complex)

    def initial(self, rho0: np.ndarray) -> np.ndarray:
        x = self.zeros()
        x[0] = rho0
        return x

    def rhs(self, x: np.ndarray) -> np.ndarray:
        """d(ados)/dt for an ADO array of shape (n_ados, 9, 9)."""
        n = self.size
        v = self._v
        xi = self.xi
        flat = x.reshape(n, DIM2 * DIM2)
        up = (self._raise @ flat).reshape(x.shape)
        lo_l = (self._lower_left @ flat).reshape(x.shape)
        lo_r = (self._lower_right @ flat).reshape(x.shape)
        xv = x @ v
        vx = np.matmul(v, x)
        # -Xi[V,[V,x]] - i(c V x- - c* x- V) - i[V, x+] grouped as V@left + right@V
        left = -xi * vx + 2.0 * xi * xv - 1j * (lo_l + up)
        right = -xi * xv + 1j * (lo_r + up)
        out = np.matmul(v, left)
        out += right @ v
        out += self._free * x
        return out

    def matrix(self) -> sp.csr_matrix:
        """Sparse superoperator acting on the row-major flattened ADO vector."""
        eye9 = np.eye(DIM2)
        v = self._v
        left_v = sp.csr_matrix(np.kron(v, eye9))
        right_v = sp.csr_matrix(np.kron(eye9, v.T))
        comm_v = left_v - right_v
        local = -self.xi * (comm_v @ comm_v)
        free = sp.diags(self._free.reshape(-1))
        gen = (
            sp.kron(sp.identity(self.size), local)
            + free
            - 1j * sp.kron(self._lower_left, left_v)
            + 1j * sp.kron(self._lower_right, right_v)
            - 1j * sp.kron(self._raise, comm_v)
        )
        return gen.tocsr()

    def expand(self, x: np.ndarray) -> np.ndarray:
        """ADOs of the full (printed) index space from a working-space array."""
        if not self.reduced:
            return x.copy()
        full = self.space.indices
        per = self.bath.m_cut + 1
        totals = full.reshape(full.shape[0], self.labels, per).sum(axis=1)
        lookup = {tuple(m): i for i, m in enumerate(self.work_space.indices.tolist())}
        out = np.empty((full.shape[0],) + x.shape[1:], dtype=x.dtype)
        for i, m in enumerate(totals.tolist()):
            out[i] = x[lookup[tuple(m)]] / float(self.labels) ** sum(m)
        return out


def heom_rhs(
    state: HierarchyState, model: SystemModel, bath: BathSpec, space: HierarchySpace
) -> HierarchyState:
    """Time derivative of every ADO of ``space`` (no channel collapsing)."""
    if state.ados.shape != (space.size, DIM2, DIM2):
        raise ValueError(
            f"state has shape {state.ados.shape}, expected {(space.size, DIM2, DIM2)}"
        )
    gen = HeomGenerator(model, bath, space, reduce=False)
    return HierarchyState(gen.rhs(state.ados), state.time)


# ---------------------------------------------------------------------------
# integration


@dataclass
class Trajectory:
    times: np.ndarray
    rho: np.ndarray

    def __len__(self) -> int:
        return self.times.size


def stability_cap(bath: BathSpec) -> float:
    """Largest accepted RK4 step, 1 / (2 nu_M)."""
    return 1.0 / (2.0 * float(np.max(bath.nu)))


def validate_density_matrix(rho: np.ndarray, atol: float = 1e-10) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (DIM2, DIM2):
        raise InvalidInitialState(f"density matrix must be 9x9, got {rho.shape}")
    if not np.all(np.isfinite(rho)):
        raise InvalidInitialState("density matrix has non-finite entries")
    if np.abs(rho - rho.conj().T).max() > atol:
        raise InvalidInitialState("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > atol:
        raise InvalidInitialState(f"trace is {np.trace(rho).real:.12g}, expected 1")
    if np.linalg.eigvalsh(rho).min() < -atol:
        raise InvalidInitialState("density matrix has negative eigenvalues")
    return rho


def _check_dt(dt: float, bath: BathSpec) -> None:
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    cap = stability_cap(bath)
    if dt >= cap:
        raise ValueError(f"dt = {dt} exceeds the stability cap 1/(2 nu_M) = {cap:.6g}")


def rk4_step(gen: HeomGenerator, x: np.ndarray, dt: float) -> np.ndarray:
    k1 = gen.rhs(x)
    k2 = gen.rhs(x + (0.5 * dt) * k1)
    k3 = gen.rhs(x + (0.5 * dt) * k2)
    k4 = gen.rhs(x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _iterate(gen: HeomGenerator, x: np.ndarray, dt: float, n_steps: int) -> np.ndarray:
    for _ in range(n_steps):
        x = rk4_step(gen, x, dt)
    if not np.all(np.isfinite(x)):
        raise NonFiniteState("hierarchy diverged; reduce dt")
    return x


def evolve(
    initial: np.ndarray,
    model: SystemModel,
    bath: BathSpec,
    space: HierarchySpace,
    dt: float = DEFAULT_DT,
    t_final: float = 10.0,
    sample_every: int = 1,
    reduce: bool = True,
) -> Trajectory:
    """Integrate the hierarchy with fixed-step RK4 and sample rho^0(t).

    Higher ADOs start at zero.  Samples are taken every ``sample_every``
    steps including t = 0; ``t_final`` is rounded to a whole number of steps.
    """
    rho0 = validate_density_matrix(initial)
    _check_dt(dt, bath)
    if sample_every < 1:
        raise ValueError("sample_every must be >= 1")
    gen = HeomGenerator(model, bath, space, reduce=reduce)
    n_steps = int(round(t_final / dt))
    n_samples = n_steps // sample_every + 1
    times = np.arange(n_samples) * (sample_every * dt)
    out = np.empty((n_samples, DIM2, DIM2), dtype=complex)
    x = gen.initial(rho0)
    out[0] = x[0]
    for s in range(1, n_samples):
        x = _iterate(gen, x, dt, sample_every)
        out[s] = x[0]
    return Trajectory(times, out)


@dataclass
class SteadyState:
    rho: np.ndarray
    converged: bool
    t_reached: float
    method: str = "evolve"


def steady_state(
    model: SystemModel,
    bath: BathSpec,
    space: HierarchySpace,
    initial: np.ndarray,
    dt: float = DEFAULT_DT,
    tolerance: float = DEFAULT_TOLERANCE,
    window: float = DEFAULT_WINDOW,
    max_time: float = DEFAULT_MAX_TIME,
    sample_interval: float = 1.0,
    strict: bool = False,
    reduce: bool = True,
) -> SteadyState:
    """Integrate until rho^0 stops changing over a trailing time window.

    Converged when, over the last ``window`` time units of samples, both the
    spread of every |rho_jk| and the spread of S_r(phi) at every phase of a
    64-point grid stay below ``tolerance``.  The second condition bounds the
    drift of max_phi S_r and also catches a drifting argmax, which the
    magnitudes alone cannot see.  Without convergence by ``max_time`` the last state is
    returned with ``converged=False`` (or :class:`MaxTimeExceeded` raised
    when ``strict``).
    """
    from qsync.measures import sync_measure_closed

    rho0 = validate_density_matrix(initial)
    _check_dt(dt, bath)
    phases = 2 * np.pi * np.arange(64) / 64
    gen = HeomGenerator(model, bath, space, reduce=reduce)
    per_sample = max(1, int(round(sample_interval / dt)))
    span = per_sample * dt
    keep = int(math.ceil(window / span)) + 1

    x = gen.initial(rho0)
    t = 0.0
    hist: deque = deque(maxlen=keep)
    hist.append((np.abs(x[0]), sync_measure_closed(_hermitian(x[0]), phases)))
    while t < max_time - 1e-12:
        x = _iterate(gen, x, dt, per_sample)
        t += span
        hist.append((np.abs(x[0]), sync_measure_closed(_hermitian(x[0]), phases)))
        if len(hist) == keep:
            mags = np.stack([h[0] for h in hist])
            curves = np.stack([h[1] for h in hist])
            if (mags.max(0) - mags.min(0)).max() < tolerance and np.ptp(curves, axis=0).max() < tolerance:
                return SteadyState(x[0].copy(), True, t)
    best = SteadyState(x[0].copy(), False, t)
    msg = f"no steady state within t = {max_time} (tolerance {tolerance}, window {window})"
    if strict:
        raise MaxTimeExceeded(msg, best)
    log.warning(msg)
    return best


def _hermitian(rho: np.ndarray) -> np.ndarray:
    # strip the rounding-level anti-Hermitian part before measuring
    h = 0.5 * (rho + rho.conj().T)
    return h / np.trace(h).real


def maximally_mixed() -> np.ndarray:
    return np.eye(DIM2, dtype=complex) / DIM2


# unknowns up to which the generator is factorized directly; sparse LU fill
# grows quickly with hierarchy depth and exhausts memory beyond this
DIRECT_LIMIT = 12000


def _trace_border(gen: HeomGenerator) -> sp.csr_matrix:
    """w w^T with w the trace functional on rho^0 in the flattened ADO vector."""
    n = gen.size * DIM2 * DIM2
    diag = np.arange(DIM2) * (DIM2 + 1)
    rows = np.repeat(diag, DIM2)
    cols = np.tile(diag, DIM2)
    return sp.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(n, n))


def _direct_tier(gen: HeomGenerator, direct_limit: int) -> int:
    """Deepest tier whose cumulative unknown count fits ``direct_limit``."""
    cum = np.cumsum(np.bincount(gen.work_space.tiers)) * DIM2 * DIM2
    top = int(np.searchsorted(cum, direct_limit, side="right")) - 1
    if top < 0:
        raise ValueError(f"direct_limit {direct_limit} is below one ADO block ({DIM2 * DIM2})")
    return top


def _bordered_stationary(
    gen: HeomGenerator, starts: list[np.ndarray], direct_limit: int, rtol: float
) -> list[np.ndarray]:
    """Solve (G + w w^T) x = w by preconditioned GMRES from each start.

    Since w^T G = 0, a solution is a stationary vector with unit trace, and
    the bordered matrix is nonsingular exactly when that vector is unique.
    The preconditioner is an exact LU of the same bordered operator on the
    lowest tiers (which hold rho^0 and the slow modes) plus exact 81x81
    block inverses on the deeper tiers.
    """
    blk = DIM2 * DIM2
    border = _trace_border(gen)
    a = (gen.matrix() + border).tocsr()
    w = np.zeros(a.shape[0], dtype=complex)
    w[np.arange(DIM2) * (DIM2 + 1)] = 1.0

    tiers = gen.work_space.tiers
    top = _direct_tier(gen, direct_limit)
    coarse = np.flatnonzero(tiers <= top)
    deep = np.flatnonzero(tiers > top)
    cu = (coarse[:, None] * blk + np.arange(blk)).ravel()
    du = (deep[:, None] * blk + np.arange(blk)).ravel()
    lu = spla.splu(a[cu][:, cu].tocsc(), permc_spec="MMD_AT_PLUS_A")
    inv = np.empty((deep.size, blk, blk), dtype=complex)
    for i, ado in enumerate(deep):
        sl = slice(ado * blk, (ado + 1) * blk)
        inv[i] = np.linalg.inv(a[sl, sl].toarray())
    log.info("GMRES: LU on tiers <= %d (%d ADOs), block inverses on %d ADOs",
             top, coarse.size, deep.size)

    def apply(x: np.ndarray) -> np.ndarray:
        y = np.empty(x.shape, dtype=complex)
        y[cu] = lu.solve(x[cu].astype(complex))
        y[du] = np.einsum("ijk,ik->ij", inv, x[du].reshape(deep.size, blk)).ravel()
        return y

    precond = spla.LinearOperator(a.shape, matvec=apply, dtype=complex)
    out = []
    for x0 in starts:
        x, info = spla.gmres(a, w, x0=x0, M=precond, rtol=rtol, atol=0.0, restart=100, maxiter=20)
        if info != 0:
            raise NonFiniteState(f"GMRES did not reach rtol {rtol} (info {info})")
        out.append(x)
    return out


def _physical(y: np.ndarray) -> np.ndarray:
    rho = y[: DIM2 * DIM2].reshape(DIM2, DIM2)
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


def _refined(lu, a, b: np.ndarray, steps: int = 2) -> np.ndarray:
    # near-singular shifted operator: refinement removes most pivot roundoff
    x = lu.solve(b)
    for _ in range(steps):
        x = x + lu.solve(b - a @ x)
    return x


def stationary_state(
    model: SystemModel,
    bath: BathSpec,
    space: HierarchySpace,
    initial: np.ndarray | None = None,
    shift: float = 1e-13,
    uniqueness_tol: float = 1e-7,
    reduce: bool = True,
    direct_limit: int = DIRECT_LIMIT,
    rtol: float = 1e-12,
) -> SteadyState:
    """Long-time limit of rho^0 from a sparse linear solve.

    Up to ``direct_limit`` unknowns this computes ``s (s - G)^{-1} x0`` for a
    tiny shift ``s`` by sparse LU, the Abel limit of ``exp(G t) x0``.  Larger
    hierarchies solve the trace-bordered stationary equation iteratively
    (see :func:`_bordered_stationary`), with the initial ADO vector as the
    starting guess.  Either way the computation is repeated from the
    maximally mixed state and ``converged`` reports whether the two results
    agree to ``uniqueness_tol``.  ``t_reached`` is infinite.
    """
    if initial is None:
        from qsync.states import equatorial_product

        initial = equatorial_product()
    rho0 = validate_density_matrix(initial)
    gen = HeomGenerator(model, bath, space, reduce=reduce)
    starts = [gen.initial(rho0).reshape(-1), gen.initial(maximally_mixed()).reshape(-1)]
    n = gen.size * DIM2 * DIM2
    if n <= direct_limit:
        a = (shift * sp.identity(n, format="csc") - gen.matrix()).tocsc()
        lu = spla.splu(a, permc_spec="MMD_AT_PLUS_A")
        rho, other = (_physical(_refined(lu, a, shift * x0)) for x0 in starts)
        if not np.all(np.isfinite(rho)):
            raise NonFiniteState("stationary solve produced non-finite entries")
        unique = bool(np.abs(rho - other).max() < uniqueness_tol)
        return SteadyState(rho, unique, math.inf, method="stationary")

    try:
        rho, other = (_physical(y) for y in _bordered_stationary(gen, starts, direct_limit, rtol))
        unique = bool(np.all(np.isfinite(rho)) and np.abs(rho - other).max() < uniqueness_tol)
    except (RuntimeError, NonFiniteState):
        # singular bordered operator: the stationary state is not unique
        unique = False
    if not unique:
        # no unique limit to iterate towards; report the Abel limit of the
        # deepest directly solvable truncation instead
        top = _direct_tier(gen, direct_limit)
        log.warning("stationary state not unique; falling back to tier cap %d", top)
        coarse = enumerate_indices(space.n_channels, top)
        res = stationary_state(model, bath, coarse, rho0, shift, uniqueness_tol, reduce, direct_limit)
        return SteadyState(res.rho, False, math.inf, method="stationary")
    return SteadyState(rho, unique, math.inf, method="stationary")


# ---------------------------------------------------------------------------
# truncation study


@dataclass
class ConvergenceTable:
    pairs: list[tuple[int, int]]
    values: np.ndarray
    differences: np.ndarray
    relative: np.ndarray

    def converged_pair(self, tolerance: float) -> tuple[int, int] | None:
        """First (M, N_c) whose forward relative difference is below tolerance."""
        for pair, rel in zip(self.pairs, self.relative):
            if np.isfinite(rel) and rel < tolerance:
                return pair
        return None


def convergence_study(
    model: SystemModel,
    bath: BathSpec,
    pairs: Sequence[tuple[int, int]],
    observable: Callable[[np.ndarray], float] | None = None,
    channel_count: int = 2,
    initial: np.ndarray | None = None,
    solver: Callable[..., SteadyState] | None = None,
) -> ConvergenceTable:
    """Evaluate a steady-state observable over truncation pairs (M, N_c).

    ``differences[i]`` is the forward difference ``|v[i+1] - v[i]|`` (nan for
    the last pair) and ``relative`` divides it by ``|v[i+1]|`` (absolute
    when that value is zero).
    """
    from qsync.measures import max_sync

    if not pairs:
        raise ValueError("need at least one (M, N_c) pair")
    if observable is None:
        observable = lambda rho: max_sync(rho)[0]  # noqa: E731
    solver = solver or stationary_state
    values = []
    for m_cut, tier_cap in pairs:
        b = bath.with_cutoff(m_cut)
        space = hierarchy_space(b, tier_cap, channel_count)
        res = solver(model, b, space, initial=initial)
        values.append(float(observable(res.rho)))
    values = np.array(values)
    diff = np.full(values.size, np.nan)
    rel = np.full(values.size, np.nan)
    diff[:-1] = np.abs(np.diff(values))
    scale = np.abs(values[1:])
    rel[:-1] = np.where(scale > 0, diff[:-1] / np.where(scale > 0, scale, 1.0), diff[:-1])
    return ConvergenceTable([tuple(p) for p in pairs], values, diff, rel)


def write_trajectory_csv(path, traj: Trajectory) -> None:
    """One row per sample: t then Re/Im of the 81 entries, row-major, 1-based labels."""
    import csv

    header = ["t"]
    for a in range(1, DIM2 + 1):
        for b in range(1, DIM2 + 1):
            header += [f"re_rho_{a}_{b}", f"im_rho_{a}_{b}"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for t, rho in zip(traj.times, traj.rho):
            flat = rho.reshape(-1)
            row = [format(float(t), ".17g")]
            for z in flat:
                row += [format(z.real, ".17g"), format(z.imag, ".17g")]
            w.writerow(row)
