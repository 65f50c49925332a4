"""Measured quantities: eta correlations, conserved charges, doublon
structure factor, occupancies, and the spin/doublon sector projections.

All computations are read-only over their inputs. Correlators on trajectory
ensembles are averages of pure-state expectations; moduli are taken after
ensemble averaging, matching what the master equation sees.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DegenerateProjectionError, DomainError, EtalabError, ShapeError
from .evolve import DensityMatrix
from .fock import StateVector, build_eta_ops, build_spin_ops, double_occupancy_diag, _popcounts

SUM_RULE_TOL = 1e-8
CONSISTENCY_TOL = 1e-9
_DENSE_K_DIM = 600


@dataclass
class EtaCorrMatrix:
    """C_ij = <eta+_i eta-_j>; Hermitian with double occupancies on the diagonal."""

    values: np.ndarray

    @property
    def M(self):
        return self.values.shape[0]

    def total(self):
        return complex(self.values.sum())

    def hermiticity_defect(self):
        return float(np.abs(self.values - self.values.conj().T).max())

    def offdiagonal(self):
        mask = ~np.eye(self.M, dtype=bool)
        return self.values[mask]


@dataclass
class StructureFactor:
    """Doublon structure factor D(q_n) on q_n a = 2 pi n / L, n = 0..L-1."""

    momenta: np.ndarray  # q_n * a
    values: np.ndarray


class SectorObservables:
    """Cached operator bundle used to sample one basis repeatedly.

    Correlations from a state vector use M sparse applications of the local
    pair annihilators; the density-matrix path keeps small dense copies of
    those maps.
    """

    def __init__(self, basis):
        self.basis = basis
        self.M = basis.M
        eta = build_eta_ops(basis)
        spin = build_spin_ops(basis)
        self.pair = eta.pair
        self.eta_z_diag = np.real(eta.z.diagonal())
        self.sz_diag = np.real(spin.z_total.diagonal())
        self.n_up_diag = _popcounts(basis.up_masks)
        self.n_down_diag = _popcounts(basis.down_masks)
        self.docc_diag = np.column_stack(
            [double_occupancy_diag(basis, i) for i in range(basis.M)]
        )
        self.minus_site = eta.minus_site
        self.lowered_dim = (
            self.minus_site[0].image.dim if not self.minus_site[0].empty_image else 0
        )
        self._minus_dense = None
        if self.lowered_dim and basis.dim <= _DENSE_K_DIM:
            self._minus_dense = [op.to_dense() for op in self.minus_site]

    def corr_matrix_state(self, amplitudes):
        M = self.M
        C = np.zeros((M, M), dtype=np.complex128)
        if self.lowered_dim == 0:
            return C
        lowered = [op.matrix @ amplitudes for op in self.minus_site]
        for i in range(M):
            C[i, i] = np.vdot(lowered[i], lowered[i])
            for j in range(i + 1, M):
                C[i, j] = np.vdot(lowered[i], lowered[j])
                C[j, i] = np.conj(C[i, j])
        return C

    def corr_matrix_density(self, rho):
        M = self.M
        C = np.zeros((M, M), dtype=np.complex128)
        if self.lowered_dim == 0:
            return C
        if self._minus_dense is None:
            raise ShapeError(
                f"density-matrix correlations capped at dim {_DENSE_K_DIM}"
            )
        right = [K @ rho for K in self._minus_dense]
        for i in range(M):
            for j in range(i, M):  # upper triangle, then mirror
                C[i, j] = np.vdot(self._minus_dense[i], right[j])
                C[j, i] = np.conj(C[i, j])
        return C

    def conserved_from_populations(self, populations, eta_pair):
        n_up = float(np.real(populations @ self.n_up_diag))
        n_down = float(np.real(populations @ self.n_down_diag))
        s_z = float(np.real(populations @ self.sz_diag))
        eta_z = float(np.real(populations @ self.eta_z_diag))
        expected_eta_z = 0.5 * (n_up + n_down - self.M)
        if abs(eta_z - expected_eta_z) > CONSISTENCY_TOL * max(1.0, abs(eta_z)):
            raise EtalabError(
                f"eta_z consistency violated: {eta_z} vs {expected_eta_z}"
            )
        return {
            "eta_pair": float(np.real(eta_pair)),
            "eta_z": eta_z,
            "s_z": s_z,
            "n_up": n_up,
            "n_down": n_down,
        }

    def measure_state(self, psi):
        amps = psi.amplitudes
        C = self.corr_matrix_state(amps)
        populations = np.abs(amps) ** 2
        pair = np.vdot(amps, self.pair.matrix @ amps)
        out = {"corr": C}
        out.update(self.conserved_from_populations(populations, pair))
        return out

    def measure_density(self, rho):
        mat = rho.matrix if isinstance(rho, DensityMatrix) else rho
        C = self.corr_matrix_density(mat)
        populations = np.real(np.diag(mat))
        pair = (self.pair.matrix @ mat).diagonal().sum()
        out = {"corr": C}
        out.update(self.conserved_from_populations(populations, pair))
        return out

    def measure(self, state):
        if isinstance(state, StateVector):
            return self.measure_state(state)
        return self.measure_density(state)


@lru_cache(maxsize=None)
def sector_observables(basis):
    return SectorObservables(basis)


def eta_correlation_matrix(state):
    """M x M matrix of <eta+_i eta-_j> for a pure state or density matrix."""
    obs = sector_observables(state.basis)
    if isinstance(state, StateVector):
        values = obs.corr_matrix_state(state.amplitudes)
    else:
        values = obs.corr_matrix_density(state.matrix)
    return EtaCorrMatrix(values)


def distance_averaged_corr(C, j):
    """Mean of C_{i,i+j} over all sites a distance j apart."""
    values = C.values if isinstance(C, EtaCorrMatrix) else np.asarray(C)
    M = values.shape[0]
    if not 0 <= j < M:
        raise DomainError(f"distance {j} outside [0, {M - 1}]")
    entries = [values[i, i + j] for i in range(M - j)]
    return complex(np.mean(entries))


def conserved_set(state):
    """{<eta+eta->, <eta^z>, <S^z>, <N_up>, <N_down>} with a consistency check."""
    obs = sector_observables(state.basis)
    result = obs.measure(state)
    return {k: result[k] for k in ("eta_pair", "eta_z", "s_z", "n_up", "n_down")}


def structure_factor_from_corr(C):
    """D(q) from the correlation matrix.

    The doublon two-point matrix is T_jk = (-1)^(j+k) C_jk, and
    D(q_n) = (1/L) sum_jk T_jk exp(i (k - j) q_n a).
    """
    values = C.values if isinstance(C, EtaCorrMatrix) else np.asarray(C)
    M = values.shape[0]
    signs = np.array([(-1.0) ** i for i in range(M)])
    T = values * np.outer(signs, signs)
    momenta = 2.0 * np.pi * np.arange(M) / M
    out = np.empty(M)
    for n, q in enumerate(momenta):
        v = np.exp(1j * q * np.arange(M))
        out[n] = float(np.real(np.vdot(v, T @ v))) / M
    return StructureFactor(momenta=momenta, values=out)


def structure_factor(state):
    return structure_factor_from_corr(eta_correlation_matrix(state))


def double_occupancy(state):
    """Per-site <n_up,i n_down,i>; equals the diagonal of the correlation matrix."""
    obs = sector_observables(state.basis)
    if isinstance(state, StateVector):
        populations = np.abs(state.amplitudes) ** 2
    else:
        populations = np.real(np.diag(state.matrix))
    return populations @ obs.docc_diag


def check_sum_rules(C, eta_pair, tol=SUM_RULE_TOL):
    """Hermiticity + sum rules every emitted correlation matrix must pass.

    sum_ij C_ij = <eta+ eta->, D(pi) L = <eta+ eta->, and
    sum_q D(q) = sum_i C_ii.
    """
    M = C.M if isinstance(C, EtaCorrMatrix) else C.shape[0]
    corr = C if isinstance(C, EtaCorrMatrix) else EtaCorrMatrix(np.asarray(C))
    if corr.hermiticity_defect() > tol:
        raise EtalabError(
            f"correlation matrix not Hermitian: defect {corr.hermiticity_defect():.3e}"
        )
    total = corr.total()
    if abs(total - eta_pair) > tol:
        raise EtalabError(
            f"sum rule violated: sum C = {total}, <eta+eta-> = {eta_pair}"
        )
    D = structure_factor_from_corr(corr)
    n_pi = M // 2
    if M % 2 == 0 and abs(D.values[n_pi] * M - np.real(eta_pair)) > tol:
        raise EtalabError(
            f"D(pi) L = {D.values[n_pi] * M} != <eta+eta-> = {np.real(eta_pair)}"
        )
    diag_sum = float(np.real(np.trace(corr.values)))
    if abs(D.values.sum() - diag_sum) > tol:
        raise EtalabError(
            f"sum_q D(q) = {D.values.sum()} != sum_i <n_up n_down>_i = {diag_sum}"
        )
    return D


@dataclass
class ProjectedBlock:
    """Renormalized sector block of a density matrix with row labels.

    Labels are site-ordered binary strings (up=1/down=0 for the spin block,
    doublon=1/vacancy=0 for the doublon block); rows are sorted so the
    first index carries the lexicographically largest string, e.g. '111000'
    first and '000111' last on six sites.
    """

    block: str
    labels: list
    matrix: np.ndarray


def project_sector_matrix(rho, which):
    """Keep only all-singlon ('spin') or no-singlon ('doublon') basis states."""
    basis = rho.basis
    if basis.is_full:
        raise DomainError("projections are defined on a fixed particle sector")
    if basis.n_up + basis.n_down != basis.M:
        raise DomainError(
            "projections need a half-filled sector (n_up + n_down = M)"
        )
    M = basis.M
    full = (1 << M) - 1
    keep = []
    labels = []
    for k, state in enumerate(basis.states):
        u, d = state.up_mask, state.down_mask
        if which == "spin":
            if (u | d) == full and (u & d) == 0:
                keep.append(k)
                labels.append("".join("1" if (u >> i) & 1 else "0" for i in range(M)))
        elif which == "doublon":
            if u == d:
                keep.append(k)
                labels.append("".join("1" if (u >> i) & 1 else "0" for i in range(M)))
        else:
            raise DomainError(f"unknown projection {which!r}; pick 'spin' or 'doublon'")
    if not keep:
        raise DegenerateProjectionError(f"no basis states survive the {which} projection")
    order = sorted(range(len(keep)), key=lambda n: labels[n], reverse=True)
    idx = np.array([keep[n] for n in order])
    block = rho.matrix[np.ix_(idx, idx)]
    trace = float(np.real(np.trace(block)))
    if trace < 1e-12:
        raise DegenerateProjectionError(
            f"{which} projection has trace {trace:.3e}; nothing to renormalize"
        )
    return ProjectedBlock(
        block=which,
        labels=[labels[n] for n in order],
        matrix=block / trace,
    )
