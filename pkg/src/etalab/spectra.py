"""Ground states and thermal states used as initial conditions.

Lowest eigenpairs come from Lanczos with full reorthogonalization and a
dense fallback below 512 states; thermal states from a dense in-sector
eigendecomposition. Thermal states are sector-canonical: the Boltzmann
weights are restricted to the basis they are built on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import CapacityError, ConvergenceError, DomainError
from .evolve import DensityMatrix
from .fock import HERMITIAN_TOL, StateVector
from .limits import DENSE_DIAG_LIMIT, dense_limit

DENSE_FALLBACK_DIM = 512
DEGENERACY_GAP = 1e-8


@dataclass
class EigenPair:
    """Converged eigenpair; residual = ||H v - E v||_2 as rechecked on exit."""

    value: float
    vector: StateVector
    residual: float
    degenerate: bool = False


@dataclass
class ThermalState:
    beta: float
    rho: DensityMatrix


def _require_hermitian(H):
    if not H.is_square:
        raise DomainError("eigen-solvers need an operator square on its basis")
    if not H.hermitian:
        defect = (H - H.dag()).max_abs()
        if defect >= HERMITIAN_TOL:
            raise DomainError(f"operator is not Hermitian (defect {defect:.3e})")


def _lanczos_sweep(mat, v0, m, scale):
    """One full-reorthogonalized Lanczos pass; returns (ritz vec, E0, gap)."""
    dim = v0.size
    V = np.empty((m, dim), dtype=np.complex128)
    alphas = np.empty(m)
    betas = np.empty(max(m - 1, 0))
    V[0] = v0
    k = 0
    for j in range(m):
        w = mat @ V[j]
        alphas[j] = np.vdot(V[j], w).real
        w = w - alphas[j] * V[j]
        if j > 0:
            w = w - betas[j - 1] * V[j - 1]
        for _ in range(2):  # full reorthogonalization, repeated for safety
            coeffs = V[: j + 1].conj() @ w
            w = w - coeffs @ V[: j + 1]
        k = j + 1
        if k == m:
            break
        b = np.linalg.norm(w)
        if b < 1e-13 * scale:
            break
        betas[j] = b
        V[j + 1] = w / b
    evals, evecs = sla.eigh_tridiagonal(alphas[:k], betas[: k - 1])
    ritz = evecs[:, 0] @ V[:k]
    ritz = ritz / np.linalg.norm(ritz)
    gap = float(evals[1] - evals[0]) if k > 1 else np.inf
    return ritz, float(evals[0]), gap


def ground_state(H, seed=11, tol=None, subspace=60, max_restarts=40):
    """Lowest eigenpair of a Hermitian sparse operator.

    Dense diagonalization below DENSE_FALLBACK_DIM states, otherwise Lanczos
    with full reorthogonalization restarted from the best Ritz vector. The
    degenerate flag is set when the spectral gap is below 1e-8; the returned
    vector is then one converged member of the ground space.
    """
    _require_hermitian(H)
    dim = H.dim
    scale = max(1.0, H.max_abs())
    if tol is None:
        tol = 1e-10 * scale

    if dim <= DENSE_FALLBACK_DIM:
        evals, evecs = np.linalg.eigh(H.to_dense())
        value = float(evals[0])
        vec = evecs[:, 0].astype(np.complex128)
        residual = float(np.linalg.norm(H.matrix @ vec - value * vec))
        gap = float(evals[1] - evals[0]) if dim > 1 else np.inf
        return EigenPair(
            value,
            StateVector(H.domain, vec, normalized=True),
            residual,
            degenerate=gap < DEGENERACY_GAP,
        )

    rng = np.random.default_rng(seed)
    mat = H.matrix
    v0 = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    v0 /= np.linalg.norm(v0)
    value = np.nan
    ritz = v0
    residual = np.inf
    gap = np.inf
    for _ in range(max_restarts):
        ritz, value, gap = _lanczos_sweep(mat, v0, min(subspace, dim), scale)
        residual = float(np.linalg.norm(mat @ ritz - value * ritz))
        if residual <= max(tol, 1e-11 * scale):
            break
        v0 = ritz
    if residual > 1e-8 * scale:
        raise ConvergenceError(
            f"Lanczos did not converge: residual {residual:.3e} "
            f"after {max_restarts} restarts",
            residual=residual,
        )
    return EigenPair(
        value,
        StateVector(H.domain, ritz, normalized=True),
        residual,
        degenerate=gap < DEGENERACY_GAP,
    )


def thermal_state(H, beta, limit=None):
    """rho = exp(-beta H) / Z by dense eigendecomposition within the sector."""
    _require_hermitian(H)
    if beta < 0:
        raise DomainError(f"inverse temperature must be >= 0, got beta={beta}")
    cap = dense_limit(DENSE_DIAG_LIMIT) if limit is None else limit
    if H.dim > cap:
        raise CapacityError(
            f"thermal state needs a dense decomposition: dim {H.dim} > cap {cap}"
        )
    evals, evecs = np.linalg.eigh(H.to_dense())
    weights = np.exp(-beta * (evals - evals.min()))
    weights /= weights.sum()
    rho = (evecs * weights) @ evecs.conj().T
    return ThermalState(float(beta), DensityMatrix(H.domain, rho))
