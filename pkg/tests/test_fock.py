"""Basis enumeration, fermionic signs, eta/spin operators."""

import numpy as np
import pytest

from etalab.errors import DomainError, ShapeError
from etalab.fock import (
    FockState,
    SparseOperator,
    StateVector,
    apply,
    basis_state,
    build_eta_ops,
    build_fermion_op,
    build_spin_ops,
    diagonal_operator,
    enumerate_full,
    enumerate_sector,
    vacuum_state,
)
from etalab.symmetry import yang_state

import oracles


@pytest.mark.parametrize(
    "M,n_up,n_down,expected",
    [(2, 1, 1, 4), (4, 2, 2, 36), (8, 4, 4, 4900)],
)
def test_sector_sizes(M, n_up, n_down, expected):
    basis = enumerate_sector(M, n_up, n_down)
    assert basis.dim == expected


def test_sector_ordering_and_index_inverse():
    basis = enumerate_sector(4, 2, 1)
    keys = [(s.up_mask << 4) | s.down_mask for s in basis.states]
    assert keys == sorted(keys)
    for k, state in enumerate(basis.states):
        assert basis.index[state] == k
        assert state.up_mask.bit_count() == 2
        assert state.down_mask.bit_count() == 1


def test_enumerate_sector_rejects_bad_counts():
    with pytest.raises(DomainError):
        enumerate_sector(3, 4, 0)
    with pytest.raises(DomainError):
        enumerate_sector(3, 0, -1)


def test_full_space_size_and_ordering():
    full = enumerate_full(3)
    assert full.dim == 64
    assert full.is_full
    keys = [(s.up_mask << 3) | s.down_mask for s in full.states]
    assert keys == sorted(keys)


@pytest.mark.parametrize("M", [2, 3])
def test_car_algebra_dense(M):
    """{c_a, c+_b} = delta_ab, {c_a, c_b} = 0 on the full space."""
    full = enumerate_full(M)
    cs, cds = {}, {}
    for site in range(M):
        for spin in ("up", "down"):
            cs[(site, spin)] = build_fermion_op(full, site, spin, dagger=False).to_dense()
            cds[(site, spin)] = build_fermion_op(full, site, spin, dagger=True).to_dense()
    modes = list(cs)
    eye = np.eye(full.dim)
    for a in modes:
        for b in modes:
            anti = cs[a] @ cds[b] + cds[b] @ cs[a]
            expected = eye if a == b else 0.0
            assert np.abs(anti - expected).max() < 1e-12
            assert np.abs(cs[a] @ cs[b] + cs[b] @ cs[a]).max() < 1e-12


@pytest.mark.parametrize("M", [2, 3])
def test_fermion_ops_match_kron_oracle(M):
    """Entrywise agreement with the independent Jordan-Wigner kron build."""
    full = enumerate_full(M)
    P = oracles.embedding(M, full)
    for site in range(M):
        for spin in ("up", "down"):
            lib = build_fermion_op(full, site, spin, dagger=False).to_dense()
            ora = P.T @ oracles.dense_annihilator(M, oracles.mode_index(site, spin)) @ P
            assert np.abs(lib - ora).max() < 1e-14


def test_creator_on_vacuum_has_plus_sign():
    vac = vacuum_state(2)
    op = build_fermion_op(vac.basis, 0, "up", dagger=True)
    out = apply(op, vac)
    target = out.basis.index[FockState(1, 0)]
    assert out.amplitudes[target] == pytest.approx(1.0)
    assert np.abs(out.amplitudes).sum() == pytest.approx(1.0)


def test_fermion_op_empty_image_flag():
    basis = enumerate_sector(2, 0, 1)
    op = build_fermion_op(basis, 0, "up", dagger=False)
    assert op.empty_image
    assert op.shape == (0, basis.dim)
    with pytest.raises(ShapeError):
        apply(op, basis_state(basis, basis.states[0]))


@pytest.mark.parametrize("M", [2, 3])
def test_eta_su2_algebra(M):
    full = enumerate_full(M)
    eta = build_eta_ops(full)
    plus, minus, z = eta.plus.to_dense(), eta.minus.to_dense(), eta.z.to_dense()
    assert np.abs(plus @ minus - minus @ plus - 2 * z).max() < 1e-12
    assert np.abs(z @ plus - plus @ z - plus).max() < 1e-12


def test_eta_site_composition_vs_oracle():
    M = 3
    full = enumerate_full(M)
    eta = build_eta_ops(full)
    P = oracles.embedding(M, full)
    ora = P.T @ oracles.dense_eta_plus(M) @ P
    assert np.abs(eta.plus.to_dense() - ora).max() < 1e-14
    for i in range(M):
        assert np.abs(eta.minus_site[i].to_dense() - eta.plus_site[i].to_dense().conj().T).max() < 1e-14


def test_eta_z_half_filled_sector_is_zero():
    basis = enumerate_sector(4, 2, 2)
    eta = build_eta_ops(basis)
    assert eta.z.max_abs() == 0.0


def test_pair_expectation_vacuum():
    vac = vacuum_state(3)
    pair = build_eta_ops(vac.basis).pair
    assert abs(vac.expectation(pair)) == 0.0


def test_pair_on_yang_state_eigenvalue():
    y = yang_state(4, 2)
    pair = build_eta_ops(y.basis).pair
    out = apply(pair, y)
    assert np.abs(out.amplitudes - 6.0 * y.amplitudes).max() < 1e-10


def test_spin_ops_eigenvalues():
    basis = enumerate_sector(2, 1, 0)
    spin = build_spin_ops(basis)
    up_at_0 = basis_state(basis, FockState(1, 0))
    assert up_at_0.expectation(spin.z_site[0]) == pytest.approx(1.0)
    doublon_basis = enumerate_sector(2, 1, 1)
    doublon = basis_state(doublon_basis, FockState(1, 1))
    sz0 = build_spin_ops(doublon_basis).z_site[0]
    assert doublon.expectation(sz0) == pytest.approx(0.0)


@pytest.mark.parametrize("M,n_up,n_down", [(3, 2, 1), (4, 1, 3)])
def test_total_sz_is_sector_scalar(M, n_up, n_down):
    basis = enumerate_sector(M, n_up, n_down)
    z = build_spin_ops(basis).z_total.to_dense()
    assert np.abs(z - (n_up - n_down) * np.eye(basis.dim)).max() < 1e-14


def test_apply_identity_and_annihilate_vacuum():
    full = enumerate_full(2)
    psi = StateVector(full, oracles.random_state(full, 5))
    ident = diagonal_operator(full, np.ones(full.dim))
    assert np.abs(apply(ident, psi).amplitudes - psi.amplitudes).max() == 0.0
    eta = build_eta_ops(full)
    vac = basis_state(full, FockState(0, 0))
    assert np.abs(apply(eta.minus, vac).amplitudes).max() == 0.0


def test_sector_closure():
    """Number-conserving operators map a sector basis to itself."""
    basis = enumerate_sector(3, 2, 1)
    eta = build_eta_ops(basis)
    spin = build_spin_ops(basis)
    for op in (eta.pair, eta.z, spin.z_total, spin.z_site[1]):
        assert op.image is basis and op.domain is basis


def test_hermitian_flag_is_verified():
    basis = enumerate_sector(2, 1, 0)
    mat = np.zeros((basis.dim, basis.dim), dtype=complex)
    mat[0, 1] = 1.0  # not Hermitian
    with pytest.raises(DomainError):
        SparseOperator(mat, basis, basis, hermitian=True)


def test_apply_shape_mismatch():
    a = enumerate_sector(2, 1, 1)
    b = enumerate_sector(2, 1, 0)
    op = build_eta_ops(a).pair
    psi = basis_state(b, b.states[0])
    with pytest.raises(ShapeError):
        apply(op, psi)


def test_statevector_normalized_flag():
    basis = enumerate_sector(2, 1, 0)
    with pytest.raises(DomainError):
        StateVector(basis, np.full(basis.dim, 0.9), normalized=True)


def test_cross_family_commutation_site_resolved():
    """eta and spin generators commute entrywise, including cross terms."""
    full = enumerate_full(2)
    eta = build_eta_ops(full)
    spin = build_spin_ops(full)
    for i in range(2):
        e = eta.plus_site[i].to_dense()
        for k in range(2):
            s = spin.z_site[k].to_dense()
            assert np.abs(e @ s - s @ e).max() < 1e-12
