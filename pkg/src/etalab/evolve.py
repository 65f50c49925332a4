"""Time evolution engines.

Three drivers share fixed-step classical RK4: direct Lindblad integration of
the density matrix, the waiting-time quantum-trajectory unraveling, and
time-dependent Schrodinger integration for the driven chain. Static closed
segments (no jump channels) use a Lanczos-based Krylov propagator instead,
which is exact to machine precision at desk scale.

Default steps are dt = 0.01/tau for the master equation and 0.005/tau for
driven evolution; both integrators monitor their conserved scalar (trace or
norm) and raise rather than renormalize when drift exceeds 1e-8.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import (
    CapacityError,
    DomainError,
    NumericalInstabilityError,
    ShapeError,
    StepSizeError,
    TrajectoryChannelError,
)
from .fock import StateVector, _compatible
from .limits import MASTER_DIM_LIMIT, dense_limit
from .model import JumpSet
from .seeding import derive_seed

DEFAULT_DT_MASTER = 0.01
DEFAULT_DT_DRIVEN = 0.005
TRACE_TOL = 1e-8
NORM_TOL = 1e-8
POSITIVITY_FLOOR = -1e-6
# below this dimension dense matrix products beat sparse ones (overhead)
DENSIFY_DIM = 128
_TIME_EPS = 1e-12


class DensityMatrix:
    """Trace-one Hermitian matrix over a basis."""

    __slots__ = ("basis", "matrix")

    def __init__(self, basis, matrix):
        mat = np.asarray(matrix, dtype=np.complex128)
        if mat.shape != (basis.dim, basis.dim):
            raise ShapeError(
                f"density matrix shape {mat.shape} != ({basis.dim}, {basis.dim})"
            )
        self.basis = basis
        self.matrix = mat

    @classmethod
    def from_state(cls, psi):
        amp = psi.amplitudes
        return cls(psi.basis, np.outer(amp, amp.conj()))

    @classmethod
    def maximally_mixed(cls, basis):
        return cls(basis, np.eye(basis.dim, dtype=np.complex128) / basis.dim)

    def trace(self):
        return complex(np.trace(self.matrix))

    def hermiticity_defect(self):
        return float(np.abs(self.matrix - self.matrix.conj().T).max())

    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.conj().T))[0])

    def expectation(self, op):
        """Tr(rho A) for an operator square on this basis."""
        if not op.is_square or not _compatible(op.domain, self.basis):
            raise ShapeError("expectation needs an operator square on the state basis")
        return complex((op.matrix @ self.matrix).diagonal().sum())

    def copy(self):
        return DensityMatrix(self.basis, self.matrix.copy())

    def __repr__(self):
        return f"DensityMatrix(dim={self.basis.dim}, trace={self.trace():.6f})"


@dataclass
class TrajectoryRecord:
    """One stochastic unraveling: jump log plus observable samples."""

    seed: int
    times: np.ndarray
    samples: dict
    jump_times: list = field(default_factory=list)  # (time, site, kind)


@dataclass
class EnsembleEstimate:
    """Trajectory-ensemble mean and standard error (sample std / sqrt(N))."""

    times: np.ndarray
    n: int
    mean: dict
    stderr: dict


@dataclass
class TrajectoryRun:
    """Inputs shared by every trajectory of an ensemble."""

    psi0: StateVector
    H: object
    jumps: list
    t_final: float
    dt: float = DEFAULT_DT_MASTER
    output_grid: np.ndarray = None
    sample: object = None


def _as_jumpsets(jumps):
    if jumps is None:
        return []
    if isinstance(jumps, JumpSet):
        return [jumps]
    return list(jumps)


def _channels(jumps):
    """Flatten jump sets into (matrix, rate, kind, site) channels."""
    chans = []
    for js in _as_jumpsets(jumps):
        if js.rate == 0.0:
            continue
        for site, op in enumerate(js.operators):
            chans.append((op.matrix, float(js.rate), js.kind, site))
    return chans


def _grid(output_grid, t_final):
    if output_grid is None:
        grid = np.array([0.0, float(t_final)])
    else:
        grid = np.asarray(output_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise DomainError("output grid must be a non-empty 1D array of times")
    if np.any(np.diff(grid) <= 0):
        raise DomainError("output grid times must be strictly increasing")
    if grid[0] < -_TIME_EPS or grid[-1] > t_final + _TIME_EPS:
        raise DomainError("output grid must lie within [0, t_final]")
    return grid


def lindblad_rhs(rho, H, jumps):
    """d rho / dt of the Lindblad generator, returned as a plain array.

    -i[H, rho] + sum_k gamma_k (L_k rho L_k^dag - 1/2 {L_k^dag L_k, rho}).
    The right-hand side of a Hermitian rho is Hermitian.
    """
    if not H.is_square or not _compatible(H.domain, rho.basis):
        raise ShapeError("Hamiltonian must be square on the state basis")
    mat = rho.matrix
    out = -1j * (H.matrix @ mat - mat @ H.matrix)
    for L, rate, _, _ in _channels(jumps):
        if L.shape != mat.shape:
            raise ShapeError("jump operator dimension does not match the state")
        Ld = L.conjugate().transpose().tocsr()
        LdL = (Ld @ L).toarray()
        out = out + rate * ((L @ mat) @ Ld.toarray() - 0.5 * (LdL @ mat + mat @ LdL))
    return out


def _is_diagonal(mat):
    off = mat - sp.diags(mat.diagonal(), shape=mat.shape)
    return off.nnz == 0 or np.abs(off.data).max() == 0.0


def _make_master_rhs(H, channels, dim):
    """RHS closure; pure-dephasing channels reduce to an elementwise weight."""
    if dim <= DENSIFY_DIM:
        Hm = H.matrix.toarray()

        def commutator(mat):
            return Hm @ mat - mat @ Hm

    else:
        Hm = H.matrix.tocsr()
        HmT = Hm.transpose().tocsr()

        def commutator(mat):
            # mat @ H computed as (H^T @ mat^T)^T to keep csr on the left
            return Hm @ mat - (HmT @ mat.T).T

    diag_channels = all(_is_diagonal(L) for L, _, _, _ in channels)
    if diag_channels:
        weights = np.zeros((dim, dim))
        for L, rate, _, _ in channels:
            l = np.real(L.diagonal())
            weights -= 0.5 * rate * np.subtract.outer(l, l) ** 2
        if channels:
            def rhs(mat):
                return -1j * commutator(mat) + weights * mat
        else:
            def rhs(mat):
                return -1j * commutator(mat)
        return rhs
    terms = []
    for L, rate, _, _ in channels:
        Ld = L.conjugate().transpose().tocsr()
        terms.append((L, Ld.toarray(), (Ld @ L).toarray(), rate))

    def rhs(mat):
        out = -1j * commutator(mat)
        for L, Ld, LdL, rate in terms:
            out += rate * ((L @ mat) @ Ld - 0.5 * (LdL @ mat + mat @ LdL))
        return out

    return rhs


def integrate_master(
    rho0,
    H,
    jumps,
    t_final,
    dt=DEFAULT_DT_MASTER,
    output_grid=None,
    callback=None,
    limit=None,
    positivity_check=True,
):
    """Classical RK4 on the Lindblad equation.

    Re-Hermitizes rho <- (rho + rho^dag)/2 after every step; validates trace
    drift (< 1e-8 over the run) and monitors positivity at every output time,
    raising NumericalInstabilityError and advising a smaller dt on failure.
    Returns [(t, DensityMatrix)] on the output grid, or only the final pair
    when a callback consumes intermediate states.
    """
    dim = rho0.basis.dim
    cap = dense_limit(MASTER_DIM_LIMIT) if limit is None else limit
    if dim > cap:
        raise CapacityError(
            f"density-matrix path capped at dim {cap}; sector has {dim}"
        )
    if dt <= 0:
        raise DomainError(f"dt must be positive, got {dt}")
    if not H.is_square or not _compatible(H.domain, rho0.basis):
        raise ShapeError("Hamiltonian must be square on the state basis")
    grid = _grid(output_grid, t_final)
    channels = _channels(jumps)
    rhs = _make_master_rhs(H, channels, dim)

    rho = 0.5 * (rho0.matrix + rho0.matrix.conj().T)
    trace0 = float(np.real(np.trace(rho)))
    t = 0.0
    out = []

    def emit(time):
        state = DensityMatrix(rho0.basis, rho.copy())
        drift = abs(np.real(np.trace(rho)) - trace0) + abs(np.imag(np.trace(rho)))
        if drift > TRACE_TOL:
            raise NumericalInstabilityError(
                f"trace drift {drift:.3e} at t={time:g}; reduce dt"
            )
        if positivity_check and state.min_eigenvalue() < POSITIVITY_FLOOR:
            raise NumericalInstabilityError(
                f"negative eigenvalue {state.min_eigenvalue():.3e} at t={time:g}; "
                "reduce dt"
            )
        if callback is not None:
            callback(time, state)
        else:
            out.append((time, state))
        return state

    last = None
    for target in grid:
        while target - t > _TIME_EPS:
            h = min(dt, target - t)
            k1 = rhs(rho)
            k2 = rhs(rho + (0.5 * h) * k1)
            k3 = rhs(rho + (0.5 * h) * k2)
            k4 = rhs(rho + h * k3)
            rho = rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            rho = 0.5 * (rho + rho.conj().T)
            t += h
        t = target
        last = emit(target)
    if callback is not None:
        return [(grid[-1], last)]
    return out


def krylov_propagate(H, psi, t, step=0.1, subspace=20):
    """exp(-i H t) psi by a Lanczos Krylov propagator (static closed flow)."""
    if not H.is_square or not _compatible(H.domain, psi.basis):
        raise ShapeError("Hamiltonian must be square on the state basis")
    mat = H.matrix
    vec = psi.amplitudes.copy()
    remaining = float(t)
    sign = 1.0 if remaining >= 0 else -1.0
    remaining = abs(remaining)
    while remaining > _TIME_EPS:
        h = min(step, remaining)
        norm = np.linalg.norm(vec)
        v = vec / norm
        m = min(subspace, vec.size)
        V = np.empty((m, vec.size), dtype=np.complex128)
        alphas = np.empty(m)
        betas = np.empty(max(m - 1, 0))
        V[0] = v
        k = 0
        for j in range(m):
            w = mat @ V[j]
            alphas[j] = np.vdot(V[j], w).real
            w = w - alphas[j] * V[j]
            if j > 0:
                w = w - betas[j - 1] * V[j - 1]
            coeffs = V[: j + 1].conj() @ w
            w = w - coeffs @ V[: j + 1]
            k = j + 1
            if k == m:
                break
            b = np.linalg.norm(w)
            if b < 1e-14:
                break
            betas[j] = b
            V[j + 1] = w / b
        evals, evecs = sla.eigh_tridiagonal(alphas[:k], betas[: k - 1])
        phases = np.exp(-1j * sign * h * evals)
        y = evecs @ (phases * evecs[0].conj())
        vec = norm * (y @ V[:k])
        remaining -= h
    return StateVector(psi.basis, vec)


def _sample_dict(sample, basis, amplitudes):
    if sample is None:
        return {}
    psi = StateVector(basis, amplitudes)
    return sample(psi)


def run_trajectory(
    psi0,
    H,
    jumps,
    t_final,
    dt=DEFAULT_DT_MASTER,
    seed=0,
    output_grid=None,
    sample=None,
):
    """Waiting-time quantum trajectory.

    The state evolves under H_eff = H - (i/2) sum_k gamma_k L_k^dag L_k with
    fixed-step RK4; when ||psi||^2 crosses a pre-drawn uniform r, the jump
    time is located by linear interpolation of the norm within the step, the
    channel is drawn with probability proportional to gamma <psi|L^dag L|psi>,
    and the jumped state is renormalized. With no active channels the flow is
    static and closed, and the Krylov propagator is used instead of RK4.
    """
    if abs(psi0.norm() - 1.0) > 1e-10:
        raise DomainError("trajectory initial state must be normalized")
    grid = _grid(output_grid, t_final)
    channels = _channels(jumps)
    rng = np.random.default_rng(seed)
    record = TrajectoryRecord(seed=seed, times=grid, samples={})
    collected = {}

    def collect(amps):
        norm = np.linalg.norm(amps)
        values = _sample_dict(sample, psi0.basis, amps / norm)
        for key, val in values.items():
            collected.setdefault(key, []).append(np.asarray(val))

    if not channels:
        psi = psi0
        t = 0.0
        for target in grid:
            if target - t > _TIME_EPS:
                psi = krylov_propagate(H, psi, target - t)
                t = target
            collect(psi.amplitudes)
        record.samples = {k: np.array(v) for k, v in collected.items()}
        return record

    dim = psi0.basis.dim
    decay = sp.csr_matrix((dim, dim), dtype=np.complex128)
    for L, rate, _, _ in channels:
        Ld = L.conjugate().transpose()
        decay = decay + rate * (Ld @ L)
    A = (-1j * H.matrix - 0.5 * decay).tocsr()
    if dim <= DENSIFY_DIM:
        A = A.toarray()
    channel_mats = [(L, rate, kind, site) for L, rate, kind, site in channels]

    def rk4(vec, h):
        k1 = A @ vec
        k2 = A @ (vec + (0.5 * h) * k1)
        k3 = A @ (vec + (0.5 * h) * k2)
        k4 = A @ (vec + h * k3)
        return vec + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    psi = psi0.amplitudes.copy()
    t = 0.0
    r = rng.random()
    for target in grid:
        while target - t > _TIME_EPS:
            h = min(dt, target - t)
            n0 = float(np.real(np.vdot(psi, psi)))
            trial = rk4(psi, h)
            n1 = float(np.real(np.vdot(trial, trial)))
            if n1 > r:
                psi = trial
                t += h
                continue
            # jump inside this step: linear interpolation of ||psi||^2
            frac = (n0 - r) / max(n0 - n1, 1e-300)
            frac = min(max(frac, 1e-12), 1.0)
            h_jump = frac * h
            psi = rk4(psi, h_jump)
            t += h_jump
            weights = np.array(
                [
                    rate * float(np.real(np.vdot(L @ psi, L @ psi)))
                    for L, rate, _, _ in channel_mats
                ]
            )
            total = weights.sum()
            if total <= 1e-28 * float(np.real(np.vdot(psi, psi))):
                raise TrajectoryChannelError(
                    f"all jump-channel weights vanished at t={t:g}",
                    state=StateVector(psi0.basis, psi),
                )
            pick = rng.random() * total
            idx = int(np.searchsorted(np.cumsum(weights), pick))
            idx = min(idx, len(channel_mats) - 1)
            L, _, kind, site = channel_mats[idx]
            psi = L @ psi
            psi = psi / np.linalg.norm(psi)
            record.jump_times.append((t, site, kind))
            r = rng.random()
        t = target
        collect(psi)
    record.samples = {k: np.array(v) for k, v in collected.items()}
    return record


def ensemble_average(run, n, master_seed, threads=1, seeds=None, return_records=False):
    """Average `n` trajectories with seeds derived from (master_seed, index).

    The reduction is by trajectory index, so results are deterministic for a
    given (master_seed, n) regardless of the thread count. An explicit seed
    list overrides the derivation (used to force degenerate ensembles in
    tests).
    """
    if n < 2:
        raise DomainError(f"ensemble needs at least 2 trajectories, got {n}")
    if seeds is None:
        seeds = [derive_seed(master_seed, i) for i in range(n)]
    elif len(seeds) != n:
        raise DomainError("explicit seed list must have one entry per trajectory")

    def one(seed):
        return run_trajectory(
            run.psi0,
            run.H,
            run.jumps,
            run.t_final,
            dt=run.dt,
            seed=seed,
            output_grid=run.output_grid,
            sample=run.sample,
        )

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(one, seeds))
    else:
        records = [one(seed) for seed in seeds]

    keys = records[0].samples.keys()
    mean = {}
    stderr = {}
    for key in keys:
        stack = np.array([rec.samples[key] for rec in records])
        mean[key] = stack.mean(axis=0)
        if n > 1:
            var = np.var(stack.real, axis=0, ddof=1) + np.var(
                stack.imag, axis=0, ddof=1
            )
            stderr[key] = np.sqrt(var / n)
        else:
            stderr[key] = np.zeros_like(np.abs(mean[key]))
    grid = _grid(run.output_grid, run.t_final)
    estimate = EnsembleEstimate(times=grid, n=n, mean=mean, stderr=stderr)
    if return_records:
        return estimate, records
    return estimate


def integrate_schrodinger_td(
    psi0,
    H,
    field_op,
    drive,
    t_final,
    dt=DEFAULT_DT_DRIVEN,
    output_grid=None,
    sample=None,
):
    """RK4 on i d psi/dt = [H + V cos(Omega t) F] psi.

    The drive is evaluated at the RK4 stage times. Norm drift above 1e-8
    over the run raises StepSizeError; the drive amplitude V max|f| sets how
    small dt must be.
    """
    if abs(psi0.norm() - 1.0) > 1e-10:
        raise DomainError("driven evolution needs a normalized initial state")
    if dt <= 0:
        raise DomainError(f"dt must be positive, got {dt}")
    grid = _grid(output_grid, t_final)
    dim = psi0.basis.dim
    Hm = H.matrix.toarray() if dim <= DENSIFY_DIM else H.matrix
    if field_op is not None:
        if not field_op.is_square or not _compatible(field_op.domain, psi0.basis):
            raise ShapeError("field operator must be square on the state basis")
        fdiag = np.real(field_op.diagonal())
    else:
        fdiag = np.zeros(dim)
    V = float(drive.V) if drive is not None else 0.0
    omega = float(drive.Omega) if drive is not None else 1.0

    def rhs(time, vec):
        out = Hm @ vec
        if V != 0.0:
            out = out + (V * np.cos(omega * time)) * (fdiag * vec)
        return -1j * out

    psi = psi0.amplitudes.copy()
    t = 0.0
    times = []
    collected = {}
    max_drift = 0.0
    for target in grid:
        while target - t > _TIME_EPS:
            h = min(dt, target - t)
            k1 = rhs(t, psi)
            k2 = rhs(t + 0.5 * h, psi + (0.5 * h) * k1)
            k3 = rhs(t + 0.5 * h, psi + (0.5 * h) * k2)
            k4 = rhs(t + h, psi + h * k3)
            psi = psi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            t += h
        t = target
        drift = abs(np.linalg.norm(psi) - 1.0)
        max_drift = max(max_drift, drift)
        if drift > NORM_TOL:
            raise StepSizeError(
                f"norm drift {drift:.3e} at t={target:g}; reduce dt "
                f"(dt={dt:g}, V max|f| = {V * np.abs(fdiag).max():.3g})"
            )
        times.append(target)
        if sample is not None:
            values = sample(StateVector(psi0.basis, psi / np.linalg.norm(psi)))
            for key, val in values.items():
                collected.setdefault(key, []).append(np.asarray(val))
    samples = {k: np.array(v) for k, v in collected.items()}
    final = StateVector(psi0.basis, psi)
    return np.array(times), samples, final
