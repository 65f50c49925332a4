"""Constructive verification of the symmetry structure.

Yang states, the two commuting SU(2) families and their commutator algebra,
jump-operator symmetry checks, and dense Liouvillian superoperators with
their kernel / imaginary-ladder analysis. Vectorization is column-stacking
throughout: vec(rho) = rho.ravel(order='F'), so vec(A rho B) =
kron(B.T, A) vec(rho).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import CapacityError, DomainError
from .fock import (
    apply,
    build_eta_ops,
    build_fermion_op,
    build_spin_ops,
    enumerate_full,
    enumerate_sector,
    vacuum_state,
)
from .limits import SUPEROP_ENTRIES_LIMIT, dense_limit
from .model import HubbardParams, build_hubbard, build_jumps

KERNEL_SVD_RTOL = 1e-9
IMAG_REAL_TOL = 1e-10
LADDER_MIN_IMAG = 1e-8


def yang_state(M, N):
    """Normalized (eta+)^N |vac>, living in the (N, N) sector."""
    if not 0 <= N <= M:
        raise DomainError(f"pair number N={N} outside [0, {M}]")
    psi = vacuum_state(M)
    for _ in range(N):
        plus = build_eta_ops(psi.basis).plus
        psi = apply(plus, psi).normalized()
    return psi


@dataclass
class CommutatorEntry:
    left: str
    right: str
    max_abs: float
    passed: bool


@dataclass
class CommutatorReport:
    tol: float
    entries: list = field(default_factory=list)
    measured_mu: float = None

    def add(self, left, right, value):
        self.entries.append(
            CommutatorEntry(left, right, float(value), float(value) < self.tol)
        )

    def failures(self):
        return [e for e in self.entries if not e.passed]

    def entry(self, left, right):
        for e in self.entries:
            if e.left == left and e.right == right:
                return e
        raise KeyError((left, right))


def _comm_norm(A, B):
    """max |[A, B]| for dense arrays."""
    return float(np.abs(A @ B - B @ A).max())


def _spin_plus_site(basis, site):
    """S+_i = c^dag_up,i c_down,i (square on any basis)."""
    down = build_fermion_op(basis, site, "down", dagger=False)
    if down.empty_image:
        return None
    up = build_fermion_op(down.image, site, "up", dagger=True)
    if up.empty_image:
        return None
    return up @ down


def algebra_check(M, U=1.0, tau=1.0, tol=1e-12):
    """Dense verification of both SU(2) families on the full Fock space.

    Checks [J+_i, J-_i'] = 2 delta_ii' Jz_i for the eta family and the spin
    family (with Sz_i = s^z_i / 2), cross-family commutation, the conserved
    charges of the Hamiltonian, and measures mu in [H, eta+] = mu eta+.
    """
    if M > 3:
        raise CapacityError("dense algebra check is limited to M <= 3")
    basis = enumerate_full(M)
    report = CommutatorReport(tol=tol)
    eta = build_eta_ops(basis)
    spin = build_spin_ops(basis)

    eta_plus = [op.to_dense() for op in eta.plus_site]
    eta_minus = [op.to_dense() for op in eta.minus_site]
    eta_z = [op.to_dense() for op in eta.z_site]
    spin_plus = [_spin_plus_site(basis, i).to_dense() for i in range(M)]
    spin_minus = [m.conj().T for m in spin_plus]
    spin_z = [0.5 * op.to_dense() for op in spin.z_site]

    for name, plus, minus, zed in (
        ("eta", eta_plus, eta_minus, eta_z),
        ("spin", spin_plus, spin_minus, spin_z),
    ):
        for i in range(M):
            for k in range(M):
                comm = plus[i] @ minus[k] - minus[k] @ plus[i]
                expected = 2.0 * zed[i] if i == k else 0.0
                report.add(
                    f"[{name}+_{i}, {name}-_{k}]",
                    f"2 d_ik {name}z_{i}",
                    np.abs(comm - expected).max(),
                )
                comm = zed[i] @ plus[k] - plus[k] @ zed[i]
                expected = plus[i] if i == k else 0.0
                report.add(
                    f"[{name}z_{i}, {name}+_{k}]",
                    f"d_ik {name}+_{i}",
                    np.abs(comm - expected).max(),
                )

    # the two families commute elementwise
    for i in range(M):
        for k in range(M):
            for a_name, a in (("eta+", eta_plus[i]), ("eta-", eta_minus[i]), ("etaz", eta_z[i])):
                for b_name, b in (
                    ("spin+", spin_plus[k]),
                    ("spin-", spin_minus[k]),
                    ("spinz", spin_z[k]),
                ):
                    report.add(f"[{a_name}_{i}, {b_name}_{k}]", "0", _comm_norm(a, b))

    H = build_hubbard(HubbardParams(M=M, tau=tau, U=U), basis).to_dense()
    pair = eta.pair.to_dense()
    etaz_tot = eta.z.to_dense()
    sz_tot = spin.z_total.to_dense()
    report.add("[H, eta+eta-]", "0", _comm_norm(H, pair))
    report.add("[H, etaz]", "0", _comm_norm(H, etaz_tot))
    report.add("[H, Sz]", "0", _comm_norm(H, sz_tot))
    report.add("[Sz, eta+]", "0", _comm_norm(sz_tot, sum(eta_plus)))

    # measure mu in [H, eta+] = mu eta+ by Frobenius projection
    eta_plus_tot = sum(eta_plus)
    comm = H @ eta_plus_tot - eta_plus_tot @ H
    denom = np.vdot(eta_plus_tot, eta_plus_tot)
    mu = float(np.real(np.vdot(eta_plus_tot, comm) / denom))
    report.measured_mu = mu
    report.add("[H, eta+] - mu eta+", "0", np.abs(comm - mu * eta_plus_tot).max())
    return report


def jump_symmetry_check(jumps, tol=1e-12, hamiltonian=None):
    """Commutators of every jump operator against the conserved generators.

    Spin jumps pass for all of {eta+, eta-, etaz, Sz}; charge jumps fail
    against eta+/- with the reported norm. A Hamiltonian, when given, is
    checked as well (dephasing alone is not a symmetry of H).
    """
    basis = jumps.operators[0].domain
    eta = build_eta_ops(basis)
    spin = build_spin_ops(basis)
    report = CommutatorReport(tol=tol)

    def rect_comm(L_dom, gen):
        """[L, G] for a generator mapping domain -> image; L diagonal-square."""
        if gen.empty_image:
            return 0.0
        if gen.image is gen.domain or gen.image.labels() == gen.domain.labels():
            return _comm_norm(L_dom.to_dense(), gen.to_dense())
        L_img = _lift_diagonal(L_dom, gen.image)
        lhs = L_img.matrix @ gen.matrix
        rhs = gen.matrix @ L_dom.matrix
        diff = lhs - rhs
        return float(np.abs(diff.toarray()).max()) if diff.nnz else 0.0

    generators = (
        ("eta+", eta.plus),
        ("eta-", eta.minus),
        ("etaz", eta.z),
        ("Sz", spin.z_total),
    )
    for site, L in enumerate(jumps.operators):
        for name, gen in generators:
            report.add(f"[L_{site}^{jumps.kind}, {name}]", "0", rect_comm(L, gen))
        if hamiltonian is not None:
            report.add(
                f"[L_{site}^{jumps.kind}, H]",
                "0",
                _comm_norm(L.to_dense(), hamiltonian.to_dense()),
            )
    return report


def _lift_diagonal(L, image_basis):
    """Rebuild a site-diagonal jump operator on another sector basis."""
    from .fock import diagonal_operator, occupation_diag

    # reconstruct from occupation numbers; works for both jump kinds here
    diag_dom = np.real(L.diagonal())
    basis = L.domain
    # identify the site and kind by matching against candidate diagonals
    for site in range(basis.M):
        sz = occupation_diag(basis, site, "up") - occupation_diag(basis, site, "down")
        if np.array_equal(diag_dom, sz):
            target = occupation_diag(image_basis, site, "up") - occupation_diag(
                image_basis, site, "down"
            )
            return diagonal_operator(image_basis, target)
        charge = occupation_diag(basis, site, "up") + occupation_diag(
            basis, site, "down"
        )
        if np.array_equal(diag_dom, charge):
            target = occupation_diag(image_basis, site, "up") + occupation_diag(
                image_basis, site, "down"
            )
            return diagonal_operator(image_basis, target)
    raise DomainError("could not identify the jump operator on the image sector")


def liouvillian_dense(H, jumps, limit=None):
    """Dense superoperator of the Lindblad map, column-stacking convention.

    L = -i (kron(I, H) - kron(H^T, I))
        + sum_k gamma [kron(conj(L_k), L_k)
                       - 1/2 kron(I, L_k^dag L_k) - 1/2 kron((L_k^dag L_k)^T, I)].
    """
    from .evolve import _as_jumpsets

    d = H.dim
    cap = dense_limit(SUPEROP_ENTRIES_LIMIT) if limit is None else limit
    if d * d > cap:
        raise CapacityError(
            f"dense Liouvillian needs dim^2 = {d * d} entries > cap {cap}"
        )
    if not H.is_square:
        raise DomainError("Liouvillian needs a square Hamiltonian")
    eye = np.eye(d)
    Hm = H.to_dense()
    L = -1j * (np.kron(eye, Hm) - np.kron(Hm.T, eye))
    for js in _as_jumpsets(jumps):
        if js.rate == 0.0:
            continue
        for op in js.operators:
            Lm = op.to_dense()
            LdL = Lm.conj().T @ Lm
            L += js.rate * (
                np.kron(Lm.conj(), Lm)
                - 0.5 * np.kron(eye, LdL)
                - 0.5 * np.kron(LdL.T, eye)
            )
    return L


@dataclass
class LiouvillianSpectrum:
    """Spectrum summary: kernel size, imaginary ladder, stability margin."""

    eigenvalues: np.ndarray
    kernel_dim: int
    imaginary: np.ndarray
    spacing: float
    spacing_residual: float
    max_real: float


def steady_space_analysis(superop):
    """Eigendecomposition plus kernel/ladder extraction of a dense Liouvillian.

    Kernel dimension counts singular values below 1e-9 of the largest, which
    is robust to 1e-12 eigensolver noise. Purely imaginary eigenvalues
    (|Re| < 1e-10, |Im| > 1e-8) are fitted to an equally spaced ladder; the
    base spacing and the max deviation from integer multiples are reported.
    """
    superop = np.asarray(superop)
    evals = sla.eigvals(superop)
    svals = np.linalg.svd(superop, compute_uv=False)
    scale = svals.max() if svals.size else 0.0
    kernel_dim = int(np.sum(svals < KERNEL_SVD_RTOL * max(scale, 1.0)))
    mask = (np.abs(evals.real) < IMAG_REAL_TOL) & (np.abs(evals.imag) > LADDER_MIN_IMAG)
    imag = np.sort(evals.imag[mask])
    spacing = 0.0
    residual = 0.0
    if imag.size:
        positive = np.sort(np.abs(imag))
        distinct = [positive[0]]
        for v in positive[1:]:
            if v - distinct[-1] > LADDER_MIN_IMAG:
                distinct.append(v)
        spacing = float(distinct[0])
        multiples = np.round(np.array(distinct) / spacing)
        residual = float(np.abs(np.array(distinct) - multiples * spacing).max())
    return LiouvillianSpectrum(
        eigenvalues=evals,
        kernel_dim=kernel_dim,
        imaginary=imag,
        spacing=spacing,
        spacing_residual=residual,
        max_real=float(evals.real.max()),
    )


def joint_projector_count(M, cluster_tol=1e-9):
    """Brute-force count of distinct joint (eta+eta-, N_up, N_down) eigenspaces."""
    count = 0
    for nu in range(M + 1):
        for nd in range(M + 1):
            basis = enumerate_sector(M, nu, nd)
            pair = build_eta_ops(basis).pair
            evals = np.sort(np.linalg.eigvalsh(pair.to_dense()))
            count += 1 + int(np.sum(np.diff(evals) > cluster_tol))
    return count


def joint_projectors(M, cluster_tol=1e-9):
    """Joint eigenprojectors of (eta+eta-, N_up, N_down) on the full space."""
    full = enumerate_full(M)
    projectors = []
    for nu in range(M + 1):
        for nd in range(M + 1):
            basis = enumerate_sector(M, nu, nd)
            embed = np.zeros((full.dim, basis.dim))
            for k, state in enumerate(basis.states):
                embed[full.index[state], k] = 1.0
            pair = build_eta_ops(basis).pair
            evals, evecs = np.linalg.eigh(pair.to_dense())
            groups = []
            start = 0
            for i in range(1, len(evals) + 1):
                if i == len(evals) or evals[i] - evals[i - 1] > cluster_tol:
                    groups.append((evals[start], evecs[:, start:i]))
                    start = i
            for lam, block in groups:
                vecs = embed @ block
                projectors.append(((float(lam), nu, nd), vecs @ vecs.conj().T))
    return full, projectors


def sector_count(M):
    """Number of (N_up, N_down) labels, the kernel size once coherences die."""
    return (M + 1) ** 2


def build_full_space_jumps(M, kind, gamma):
    """Jump set on the full Fock space (for Liouvillian studies)."""
    return build_jumps(kind, enumerate_full(M), gamma)
