"""Hamiltonian assembly, drive profiles, jump sets."""

import numpy as np
import pytest

from etalab.errors import DomainError
from etalab.fock import (
    FockState,
    basis_state,
    build_eta_ops,
    enumerate_full,
    enumerate_sector,
)
from etalab.model import (
    DriveParams,
    HubbardParams,
    build_field_op,
    build_hubbard,
    build_jumps,
    resolve_profile,
)

import oracles


def test_params_validation():
    with pytest.raises(DomainError):
        HubbardParams(M=1)
    with pytest.raises(DomainError):
        HubbardParams(M=2, tau=0.0)
    with pytest.raises(DomainError):
        HubbardParams(M=2, boundary="periodic")
    with pytest.raises(DomainError):
        DriveParams(V=1.0, Omega=0.0)
    with pytest.raises(DomainError):
        DriveParams(V=1.0, Omega=1.0, profile="random")  # seed missing


def test_free_fermions_on_a_bond():
    basis = enumerate_sector(2, 1, 1)
    H = build_hubbard(HubbardParams(M=2, U=0.0), basis)
    assert np.linalg.eigvalsh(H.to_dense())[0] == pytest.approx(-2.0, abs=1e-12)


def test_interacting_bond_ground_energy():
    # dense 4x4 diagonalization oracle: E0 = 2 - 2 sqrt(2) at U = 4 tau
    basis = enumerate_sector(2, 1, 1)
    H = build_hubbard(HubbardParams(M=2, U=4.0), basis)
    e0 = np.linalg.eigvalsh(H.to_dense())[0]
    assert e0 == pytest.approx(2.0 - 2.0 * np.sqrt(2.0), abs=1e-12)


@pytest.mark.parametrize("M", [2, 3])
def test_hubbard_matches_kron_oracle(M):
    full = enumerate_full(M)
    H = build_hubbard(HubbardParams(M=M, tau=1.0, U=2.7), full)
    P = oracles.embedding(M, full)
    ora = P.T @ oracles.dense_hubbard(M, 1.0, 2.7) @ P
    assert np.abs(H.to_dense() - ora).max() < 1e-12


def test_hubbard_is_real_symmetric_and_sparse_bound():
    basis = enumerate_sector(4, 2, 2)
    H = build_hubbard(HubbardParams(M=4, U=1.5), basis)
    dense = H.to_dense()
    assert np.abs(dense.imag).max() == 0.0
    assert np.abs(dense - dense.T).max() < 1e-12
    # nonzeros per row <= 2 * coordination * particles + 1
    bound = 2 * 2 * 4 + 1
    nnz_rows = np.diff(H.matrix.indptr)
    assert nnz_rows.max() <= bound


@pytest.mark.parametrize("M", [2, 3])
def test_hubbard_commutes_with_conserved_charges(M):
    full = enumerate_full(M)
    H = build_hubbard(HubbardParams(M=M, U=1.3), full).to_dense()
    eta = build_eta_ops(full)
    for label, op in (("pair", eta.pair), ("z", eta.z)):
        dense = op.to_dense()
        assert np.abs(H @ dense - dense @ H).max() < 1e-12, label


@pytest.mark.parametrize("M", [2, 3])
def test_hubbard_eta_ladder_relation(M):
    """[H, eta+] = U eta+ under the literal interaction convention."""
    full = enumerate_full(M)
    U = 3.0
    H = build_hubbard(HubbardParams(M=M, U=U), full).to_dense()
    plus = build_eta_ops(full).plus.to_dense()
    assert np.abs(H @ plus - plus @ H - U * plus).max() < 1e-12


def test_field_op_profiles():
    basis = enumerate_sector(4, 2, 2)
    drive = DriveParams(V=1.0, Omega=1.0, profile="linear")
    assert np.array_equal(resolve_profile(drive, 4), [0.0, 1.0, 2.0, 3.0])
    F = build_field_op(DriveParams(V=1.0, Omega=1.0, profile="staggered"), basis)
    # Neel-like singlon pattern up,down,up,down: s^z = (+1,-1,+1,-1)
    neel = basis_state(basis, FockState(0b0101, 0b1010))
    assert neel.expectation(F) == pytest.approx(4.0)
    custom = DriveParams(V=1.0, Omega=1.0, profile="custom", values=(0.0, 1.0, 2.0))
    with pytest.raises(DomainError):
        build_field_op(custom, basis)


def test_random_profile_reproducible():
    drive = DriveParams(V=1.0, Omega=1.0, profile="random", seed=42)
    a = resolve_profile(drive, 6)
    b = resolve_profile(drive, 6)
    assert np.array_equal(a, b)
    assert np.all((a >= 0.0) & (a <= 2.0))


@pytest.mark.parametrize("M", [2, 3])
def test_field_op_commutes_with_eta_generators(M):
    full = enumerate_full(M)
    F = build_field_op(DriveParams(V=1.0, Omega=1.0, profile="linear"), full).to_dense()
    eta = build_eta_ops(full)
    for op in (eta.plus, eta.minus, eta.z):
        dense = op.to_dense()
        assert np.abs(F @ dense - dense @ F).max() < 1e-12


def test_spin_jumps_commute_with_eta_charge_jumps_do_not():
    full = enumerate_full(3)
    eta_plus = build_eta_ops(full).plus.to_dense()
    spin = build_jumps("spin", full, 1.0)
    for L in spin.operators:
        dense = L.to_dense()
        assert np.abs(dense @ eta_plus - eta_plus @ dense).max() < 1e-12

    full2 = enumerate_full(2)
    eta_plus2 = build_eta_ops(full2).plus.to_dense()
    charge = build_jumps("charge", full2, 1.0)
    norms = [
        np.abs(L.to_dense() @ eta_plus2 - eta_plus2 @ L.to_dense()).max()
        for L in charge.operators
    ]
    assert all(n == pytest.approx(2.0) for n in norms)


def test_jumps_are_hermitian_and_unital():
    basis = enumerate_sector(3, 2, 1)
    for kind in ("spin", "charge"):
        js = build_jumps(kind, basis, 0.7)
        assert js.rate == 0.7
        total = np.zeros((basis.dim, basis.dim), dtype=complex)
        for L in js.operators:
            assert L.hermitian
            dense = L.to_dense()
            total += dense @ dense.conj().T - dense.conj().T @ dense
        assert np.abs(total).max() == 0.0


def test_negative_rate_rejected():
    basis = enumerate_sector(2, 1, 1)
    with pytest.raises(DomainError):
        build_jumps("spin", basis, -0.1)
    with pytest.raises(DomainError):
        build_jumps("number", basis, 0.1)
