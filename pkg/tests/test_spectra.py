"""Ground-state solver and thermal states."""

import numpy as np
import pytest

from etalab.errors import CapacityError, DomainError
from etalab.fock import SparseOperator, enumerate_sector
from etalab.model import HubbardParams, build_hubbard
from etalab.spectra import ground_state, thermal_state


def _hubbard(M, n_up, n_down, U):
    basis = enumerate_sector(M, n_up, n_down)
    return build_hubbard(HubbardParams(M=M, U=U), basis)


def test_two_site_examples():
    assert ground_state(_hubbard(2, 1, 1, 0.0)).value == pytest.approx(-2.0, abs=1e-12)
    assert ground_state(_hubbard(2, 1, 1, 4.0)).value == pytest.approx(
        2.0 - 2.0 * np.sqrt(2.0), abs=1e-12
    )


def test_m4_sector_matches_dense_oracle():
    H = _hubbard(4, 2, 2, 4.0)
    pair = ground_state(H)
    dense = np.linalg.eigvalsh(H.to_dense())[0]
    assert abs(pair.value - dense) < 1e-10
    assert pair.residual < 1e-8 * max(1.0, H.max_abs())


@pytest.mark.parametrize(
    "M,n_up,n_down,U",
    [(4, 2, 2, 1.0), (6, 2, 2, 2.5), (6, 3, 3, 1.0), (8, 2, 2, 4.0)],
)
def test_lanczos_agrees_with_dense(M, n_up, n_down, U):
    """Force the Lanczos path and compare against numpy on every sector."""
    H = _hubbard(M, n_up, n_down, U)
    dense_value = np.linalg.eigvalsh(H.to_dense())[0]
    import etalab.spectra as spectra

    old = spectra.DENSE_FALLBACK_DIM
    spectra.DENSE_FALLBACK_DIM = 1  # force Lanczos
    try:
        pair = ground_state(H)
    finally:
        spectra.DENSE_FALLBACK_DIM = old
    assert abs(pair.value - dense_value) < 1e-9
    resid = np.linalg.norm(H.matrix @ pair.vector.amplitudes - pair.value * pair.vector.amplitudes)
    assert resid < 1e-8 * max(1.0, H.max_abs())


def test_ground_state_rejects_non_hermitian():
    basis = enumerate_sector(2, 1, 0)
    mat = np.zeros((basis.dim, basis.dim), dtype=complex)
    mat[0, 1] = 1.0
    op = SparseOperator(mat, basis, basis)
    with pytest.raises(DomainError):
        ground_state(op)


def test_degenerate_flag():
    basis = enumerate_sector(2, 1, 0)
    op = SparseOperator(np.eye(basis.dim), basis, basis, hermitian=True)
    assert ground_state(op).degenerate


def test_thermal_beta_zero_is_maximally_mixed():
    H = _hubbard(2, 1, 1, 1.0)
    th = thermal_state(H, 0.0)
    assert np.abs(th.rho.matrix - np.eye(4) / 4).max() < 1e-12


def test_thermal_large_beta_projects_on_ground_state():
    H = _hubbard(2, 1, 1, 4.0)
    gs = ground_state(H)
    th = thermal_state(H, 1e3)
    v = gs.vector.amplitudes
    fidelity = float(np.real(np.vdot(v, th.rho.matrix @ v)))
    assert fidelity >= 1.0 - 1e-6


def test_thermal_m6_energy_bounds():
    H = _hubbard(6, 3, 3, 2.5)
    th = thermal_state(H, 0.8)
    assert abs(th.rho.trace() - 1.0) < 1e-10
    assert th.rho.hermiticity_defect() < 1e-10
    assert th.rho.min_eigenvalue() >= -1e-10
    evals = np.linalg.eigvalsh(H.to_dense())
    energy = float(np.real(th.rho.expectation(H)))
    assert evals[0] < energy < evals.mean()


def test_thermal_energy_monotone_in_beta():
    H = _hubbard(4, 2, 2, 2.5)
    energies = [
        float(np.real(thermal_state(H, b).rho.expectation(H)))
        for b in (0.0, 0.2, 0.5, 0.8, 1.5, 3.0)
    ]
    assert all(e2 <= e1 + 1e-12 for e1, e2 in zip(energies, energies[1:]))


def test_thermal_capacity_and_domain_errors():
    H = _hubbard(4, 2, 2, 1.0)
    with pytest.raises(CapacityError):
        thermal_state(H, 1.0, limit=10)
    with pytest.raises(DomainError):
        thermal_state(H, -0.1)
