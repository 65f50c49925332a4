"""Hubbard Hamiltonian, driven-field term, and Lindblad jump-operator sets.

Energies are expressed in units of the hopping tau throughout (tau = 1
internally, hbar = 1); times are reported as t*tau.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import DomainError
from .fock import (
    SparseOperator,
    apply_annihilate,
    apply_create,
    build_spin_ops,
    diagonal_operator,
    occupation_diag,
)

PROFILES = ("linear", "staggered", "random", "custom")


@dataclass(frozen=True)
class HubbardParams:
    """Open-boundary 1D Hubbard chain: hopping tau and interaction U."""

    M: int
    tau: float = 1.0
    U: float = 0.0
    boundary: str = "open"

    def __post_init__(self):
        if self.M < 2:
            raise DomainError(f"need M >= 2 sites, got {self.M}")
        if self.tau <= 0:
            raise DomainError(f"hopping must be positive, got tau={self.tau}")
        if self.boundary != "open":
            raise DomainError(f"only open boundaries are supported, got {self.boundary!r}")


@dataclass(frozen=True)
class DriveParams:
    """Inhomogeneous field drive B(t) = V cos(Omega t) with profile f(i).

    Profiles: linear f(i)=i, staggered f(i)=(-1)^i, random f(i)~U[0,2]
    reproducible from `seed`, or a custom per-site list.
    """

    V: float
    Omega: float
    profile: str = "linear"
    seed: int | None = None
    values: tuple = None

    def __post_init__(self):
        if self.Omega <= 0:
            raise DomainError(f"drive frequency must be positive, got {self.Omega}")
        if self.profile not in PROFILES:
            raise DomainError(f"unknown profile {self.profile!r}; pick one of {PROFILES}")
        if self.profile == "random" and self.seed is None:
            raise DomainError("random profile needs a seed for reproducibility")
        if self.profile == "custom" and self.values is None:
            raise DomainError("custom profile needs explicit per-site values")
        if self.values is not None:
            object.__setattr__(self, "values", tuple(float(v) for v in self.values))


def resolve_profile(drive, M):
    """Per-site field profile f(i) as a float array of length M."""
    if drive.profile == "linear":
        return np.arange(M, dtype=float)
    if drive.profile == "staggered":
        return np.array([(-1.0) ** i for i in range(M)])
    if drive.profile == "random":
        return np.random.default_rng(drive.seed).uniform(0.0, 2.0, size=M)
    values = np.asarray(drive.values, dtype=float)
    if values.shape != (M,):
        raise DomainError(
            f"custom profile has {values.size} entries for an M={M} chain"
        )
    return values


@dataclass
class JumpSet:
    """Homogeneous set of Hermitian jump operators with one rate gamma.

    Both kinds built here (spin s^z_j and charge n_up,m + n_down,m) are
    Hermitian and diagonal in the occupation basis, so the dissipative map
    is unital: sum_k [L_k, L_k^dag] = 0 exactly.
    """

    operators: list
    rate: float
    kind: str


def build_hubbard(params, basis):
    """H = -tau sum_<ij>,sigma (c^dag_i c_j + h.c.) + U sum_i n_up n_down.

    Open-boundary nearest-neighbour hopping; real symmetric in the
    occupation basis and block-diagonal over (n_up, n_down) sectors.
    """
    if basis.M != params.M:
        raise DomainError(f"basis is for M={basis.M}, params for M={params.M}")
    M = params.M
    rows, cols, vals = [], [], []
    for k, state in enumerate(basis.states):
        docc = (state.up_mask & state.down_mask).bit_count()
        if docc:
            rows.append(k)
            cols.append(k)
            vals.append(params.U * docc)
        for i in range(M - 1):
            for offset in (0, 1):
                for a, b in ((i, i + 1), (i + 1, i)):
                    hop = apply_annihilate(state.up_mask, state.down_mask, a, offset)
                    if hop is None:
                        continue
                    s1, u1, d1 = hop
                    put = apply_create(u1, d1, b, offset)
                    if put is None:
                        continue
                    s2, u2, d2 = put
                    rows.append(basis.index[(u2, d2)])
                    cols.append(k)
                    vals.append(-params.tau * s1 * s2)
    mat = sp.coo_matrix(
        (np.array(vals, dtype=np.complex128), (rows, cols)),
        shape=(basis.dim, basis.dim),
    ).tocsr()
    return SparseOperator(mat, basis, basis, hermitian=True)


def build_field_op(drive, basis):
    """Diagonal drive operator F = sum_i f(i) s^z_i.

    The time-dependent Hamiltonian is H(t) = H + V cos(Omega t) * F. F is
    built from spin-z operators only, so it commutes with every eta
    generator and with the total S^z.
    """
    profile = resolve_profile(drive, basis.M)
    spin = build_spin_ops(basis)
    diag = np.zeros(basis.dim)
    for i, f in enumerate(profile):
        diag += f * np.real(spin.z_site[i].diagonal())
    return diagonal_operator(basis, diag)


def build_jumps(kind, basis, gamma):
    """Site-local jump operators: spin s^z_j or charge n_up,m + n_down,m."""
    if gamma < 0:
        raise DomainError(f"jump rate must be non-negative, got gamma={gamma}")
    if kind == "spin":
        ops = list(build_spin_ops(basis).z_site)
    elif kind == "charge":
        ops = [
            diagonal_operator(
                basis,
                occupation_diag(basis, m, "up") + occupation_diag(basis, m, "down"),
            )
            for m in range(basis.M)
        ]
    else:
        raise DomainError(f"unknown jump kind {kind!r}; pick 'spin' or 'charge'")
    return JumpSet(operators=ops, rate=float(gamma), kind=kind)
