"""Bit-encoded occupation bases and sparse second-quantized operators.

Fermion modes are ordered as mode = 2*site + spin (spin 0 = up, 1 = down),
sites 0-based along the open chain. Jordan-Wigner phases count occupied modes
strictly below the addressed mode, so every matrix element is a reproducible
integer. Pair (eta) operators carry the bipartite phase (-1)^site, +1 on
site 0; the global sign cancels in all two-point pair correlators.

All bases and operators are immutable after construction and safe to share
across threads. Basis enumeration is cached, so bases with equal labels are
the same object and operator algebra can check compatibility by identity.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from .errors import DomainError, ShapeError

SPIN_UP = "up"
SPIN_DOWN = "down"
_SPIN_OFFSET = {SPIN_UP: 0, SPIN_DOWN: 1}

HERMITIAN_TOL = 1e-12
NORM_TOL = 1e-10


class FockState(NamedTuple):
    """Occupation bitmasks, one bit per site for each spin species."""

    up_mask: int
    down_mask: int


def _parity_below(up_mask, down_mask, mode):
    """Parity of the number of occupied modes strictly below `mode`."""
    site = mode >> 1
    below = (1 << site) - 1
    count = (up_mask & below).bit_count() + (down_mask & below).bit_count()
    if mode & 1:  # the up mode of the same site sits below the down mode
        count += (up_mask >> site) & 1
    return count & 1


def apply_create(up_mask, down_mask, site, spin_offset):
    """c^dag on a basis state; (sign, up', down') or None if occupied."""
    occ = down_mask if spin_offset else up_mask
    if (occ >> site) & 1:
        return None
    sign = -1 if _parity_below(up_mask, down_mask, 2 * site + spin_offset) else 1
    if spin_offset:
        down_mask |= 1 << site
    else:
        up_mask |= 1 << site
    return sign, up_mask, down_mask


def apply_annihilate(up_mask, down_mask, site, spin_offset):
    """c on a basis state; (sign, up', down') or None if empty."""
    occ = down_mask if spin_offset else up_mask
    if not (occ >> site) & 1:
        return None
    sign = -1 if _parity_below(up_mask, down_mask, 2 * site + spin_offset) else 1
    if spin_offset:
        down_mask &= ~(1 << site)
    else:
        up_mask &= ~(1 << site)
    return sign, up_mask, down_mask


class SectorBasis:
    """Ordered occupation basis with an exact index lookup.

    A sector basis fixes (n_up, n_down); the full Fock space uses
    n_up = n_down = None. States are sorted ascending by
    (up_mask, down_mask) read as unsigned integers, and `index` is the
    exact inverse of `states`. Instances compare by identity.
    """

    __slots__ = ("M", "n_up", "n_down", "states", "index", "up_masks", "down_masks")

    def __init__(self, M, n_up, n_down, states):
        self.M = M
        self.n_up = n_up
        self.n_down = n_down
        self.states = tuple(states)
        self.index = {state: k for k, state in enumerate(self.states)}
        self.up_masks = np.array([s.up_mask for s in self.states], dtype=np.int64)
        self.down_masks = np.array([s.down_mask for s in self.states], dtype=np.int64)

    @property
    def dim(self):
        return len(self.states)

    @property
    def is_full(self):
        return self.n_up is None

    def labels(self):
        return (self.M, self.n_up, self.n_down)

    def __len__(self):
        return len(self.states)

    def __repr__(self):
        if self.is_full:
            return f"SectorBasis(M={self.M}, full, dim={self.dim})"
        return (
            f"SectorBasis(M={self.M}, n_up={self.n_up}, n_down={self.n_down}, "
            f"dim={self.dim})"
        )


def _masks_with_popcount(M, n):
    return sorted(sum(1 << i for i in sites) for sites in combinations(range(M), n))


@lru_cache(maxsize=None)
def enumerate_sector(M, n_up, n_down):
    """Basis of the fixed-(n_up, n_down) sector of an M-site chain."""
    if M < 1:
        raise DomainError(f"need at least one site, got M={M}")
    if not 0 <= n_up <= M:
        raise DomainError(f"n_up={n_up} outside [0, {M}]")
    if not 0 <= n_down <= M:
        raise DomainError(f"n_down={n_down} outside [0, {M}]")
    ups = _masks_with_popcount(M, n_up)
    downs = _masks_with_popcount(M, n_down)
    states = [FockState(u, d) for u in ups for d in downs]
    return SectorBasis(M, n_up, n_down, states)


@lru_cache(maxsize=None)
def enumerate_full(M):
    """Full 4^M Fock space of an M-site chain, same ordering rule."""
    if M < 1:
        raise DomainError(f"need at least one site, got M={M}")
    states = [FockState(u, d) for u in range(1 << M) for d in range(1 << M)]
    return SectorBasis(M, None, None, states)


def _compatible(a, b):
    return a is b or (a is not None and b is not None and a.labels() == b.labels())


class SparseOperator:
    """Sparse complex matrix mapping a domain basis into an image basis.

    `image` is None exactly when the target sector does not exist (for
    example annihilating out of n_sigma = 0); the stored matrix is then
    0 x dim and `empty_image` is set. Setting hermitian=True asserts the
    operator is square with max |A - A^dag| below 1e-12 and fails loudly
    otherwise.
    """

    __slots__ = ("matrix", "domain", "image", "hermitian")

    def __init__(self, matrix, domain, image, hermitian=False):
        mat = sp.csr_matrix(matrix, dtype=np.complex128)
        mat.sum_duplicates()
        rows = image.dim if image is not None else 0
        if mat.shape != (rows, domain.dim):
            raise ShapeError(
                f"matrix shape {mat.shape} does not match bases "
                f"({rows}, {domain.dim})"
            )
        if hermitian:
            if image is None or not _compatible(image, domain):
                raise ShapeError("hermitian operator must be square on its basis")
            defect = _max_abs(mat - mat.conjugate().transpose())
            if defect >= HERMITIAN_TOL:
                raise DomainError(
                    f"operator marked hermitian but max |A - A^dag| = {defect:.3e}"
                )
        self.matrix = mat
        self.domain = domain
        self.image = image
        self.hermitian = hermitian

    @property
    def dim(self):
        return self.domain.dim

    @property
    def shape(self):
        return self.matrix.shape

    @property
    def empty_image(self):
        return self.image is None

    @property
    def is_square(self):
        return self.image is not None and _compatible(self.image, self.domain)

    def dag(self):
        if self.empty_image:
            raise ShapeError("cannot take the adjoint of an empty-image operator")
        return SparseOperator(
            self.matrix.conjugate().transpose().tocsr(),
            self.image,
            self.domain,
            hermitian=self.hermitian,
        )

    def __matmul__(self, other):
        if not isinstance(other, SparseOperator):
            return NotImplemented
        if other.empty_image or not _compatible(other.image, self.domain):
            raise ShapeError("operator composition: image/domain sectors differ")
        return SparseOperator(self.matrix @ other.matrix, other.domain, self.image)

    def _binary(self, other, op):
        if not isinstance(other, SparseOperator):
            return NotImplemented
        if not _compatible(self.domain, other.domain):
            raise ShapeError("operator sum: domains differ")
        if (self.image is None) != (other.image is None) or not _compatible(
            self.image, other.image
        ):
            raise ShapeError("operator sum: images differ")
        return SparseOperator(
            op(self.matrix, other.matrix),
            self.domain,
            self.image,
            hermitian=self.hermitian and other.hermitian,
        )

    def __add__(self, other):
        return self._binary(other, lambda a, b: a + b)

    def __sub__(self, other):
        return self._binary(other, lambda a, b: a - b)

    def __mul__(self, scalar):
        scalar = complex(scalar)
        return SparseOperator(
            self.matrix * scalar,
            self.domain,
            self.image,
            hermitian=self.hermitian and scalar.imag == 0.0,
        )

    __rmul__ = __mul__

    def __neg__(self):
        return self * (-1.0)

    def to_dense(self):
        return self.matrix.toarray()

    def diagonal(self):
        return self.matrix.diagonal()

    def max_abs(self):
        return _max_abs(self.matrix)

    def __repr__(self):
        tag = "empty-image " if self.empty_image else ""
        return f"SparseOperator({tag}shape={self.shape}, nnz={self.matrix.nnz})"


def _max_abs(mat):
    return float(np.abs(mat.data).max()) if mat.nnz else 0.0


def zero_operator(domain, image=None):
    """All-zero operator; image=None flags a non-existent target sector."""
    rows = image.dim if image is not None else 0
    return SparseOperator(
        sp.csr_matrix((rows, domain.dim), dtype=np.complex128), domain, image
    )


def identity_operator(basis):
    return SparseOperator(
        sp.identity(basis.dim, dtype=np.complex128, format="csr"),
        basis,
        basis,
        hermitian=True,
    )


def diagonal_operator(basis, values, hermitian=None):
    values = np.asarray(values)
    if values.shape != (basis.dim,):
        raise ShapeError(f"diagonal length {values.shape} != basis dim {basis.dim}")
    if hermitian is None:
        hermitian = bool(np.all(np.abs(np.imag(values)) < HERMITIAN_TOL))
    return SparseOperator(
        sp.diags(values.astype(np.complex128), format="csr"),
        basis,
        basis,
        hermitian=hermitian,
    )


class StateVector:
    """Complex amplitude vector over a basis; treated as immutable."""

    __slots__ = ("basis", "amplitudes")

    def __init__(self, basis, amplitudes, normalized=False):
        amp = np.asarray(amplitudes, dtype=np.complex128)
        if amp.shape != (basis.dim,):
            raise ShapeError(f"amplitude length {amp.shape} != basis dim {basis.dim}")
        if normalized and abs(np.linalg.norm(amp) - 1.0) > NORM_TOL:
            raise DomainError("state marked normalized but ||psi|| != 1")
        self.basis = basis
        self.amplitudes = amp

    def norm(self):
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self):
        n = self.norm()
        if n == 0.0:
            raise DomainError("cannot normalize the zero vector")
        return StateVector(self.basis, self.amplitudes / n, normalized=True)

    def expectation(self, op):
        """<psi| op |psi> for an operator square on this basis."""
        if not op.is_square or not _compatible(op.domain, self.basis):
            raise ShapeError("expectation needs an operator square on the state basis")
        return complex(np.vdot(self.amplitudes, op.matrix @ self.amplitudes))

    def overlap(self, other):
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def __repr__(self):
        return f"StateVector(dim={self.basis.dim}, norm={self.norm():.6f})"


def basis_state(basis, state):
    """Unit vector on one occupation state."""
    amp = np.zeros(basis.dim, dtype=np.complex128)
    amp[basis.index[state]] = 1.0
    return StateVector(basis, amp, normalized=True)


def vacuum_state(M):
    return basis_state(enumerate_sector(M, 0, 0), FockState(0, 0))


def apply(op, psi):
    """Sparse matrix-vector product; the result lives on op's image basis."""
    if op.empty_image:
        raise ShapeError("cannot apply an operator with an empty image sector")
    if not _compatible(op.domain, psi.basis):
        raise ShapeError("operator domain does not match the state basis")
    return StateVector(op.image, op.matrix @ psi.amplitudes)


def build_fermion_op(basis_in, site, spin, dagger):
    """Single creation/annihilation operator with Jordan-Wigner signs.

    Maps `basis_in` into the image sector basis (n_sigma +- 1); on the full
    Fock space the operator is square. Returns a flagged empty-image zero
    operator when the image sector does not exist.
    """
    if not 0 <= site < basis_in.M:
        raise DomainError(f"site {site} outside chain of {basis_in.M} sites")
    if spin not in _SPIN_OFFSET:
        raise DomainError(f"spin must be '{SPIN_UP}' or '{SPIN_DOWN}', got {spin!r}")
    offset = _SPIN_OFFSET[spin]

    if basis_in.is_full:
        image = basis_in
    else:
        delta = 1 if dagger else -1
        n_up = basis_in.n_up + (delta if offset == 0 else 0)
        n_down = basis_in.n_down + (delta if offset == 1 else 0)
        if not (0 <= n_up <= basis_in.M and 0 <= n_down <= basis_in.M):
            return zero_operator(basis_in)
        image = enumerate_sector(basis_in.M, n_up, n_down)

    act = apply_create if dagger else apply_annihilate
    rows, cols, vals = [], [], []
    for k, state in enumerate(basis_in.states):
        res = act(state.up_mask, state.down_mask, site, offset)
        if res is None:
            continue
        sign, u, d = res
        rows.append(image.index[FockState(u, d)])
        cols.append(k)
        vals.append(sign)
    mat = sp.coo_matrix(
        (np.array(vals, dtype=np.complex128), (rows, cols)),
        shape=(image.dim, basis_in.dim),
    ).tocsr()
    return SparseOperator(mat, basis_in, image)


def _sum_ops(ops, domain):
    live = [op for op in ops if not op.empty_image]
    if not live:
        return zero_operator(domain)
    total = live[0]
    for op in live[1:]:
        total = total + op
    return total


def _eta_plus_site(basis, site):
    """(-1)^site c^dag_up c^dag_down on one site, composed from fermion ops."""
    first = build_fermion_op(basis, site, SPIN_DOWN, dagger=True)
    if first.empty_image:
        return zero_operator(basis)
    second = build_fermion_op(first.image, site, SPIN_UP, dagger=True)
    if second.empty_image:
        return zero_operator(basis)
    sign = -1.0 if site % 2 else 1.0
    return sign * (second @ first)


@dataclass(frozen=True)
class EtaOperators:
    """Per-site and total eta operators over one basis.

    plus_site maps the basis into the (n_up+1, n_down+1) sector, minus_site
    into (n_up-1, n_down-1); z_site and the totals z, pair are square.
    """

    basis: SectorBasis
    plus_site: tuple
    minus_site: tuple
    z_site: tuple
    plus: SparseOperator
    minus: SparseOperator
    z: SparseOperator
    pair: SparseOperator


@lru_cache(maxsize=None)
def build_eta_ops(basis):
    """Eta SU(2) generators (site-resolved and total) plus eta+ eta-."""
    M = basis.M
    plus_site = tuple(_eta_plus_site(basis, i) for i in range(M))
    plus = _sum_ops(plus_site, basis)

    if basis.is_full:
        minus_site = tuple(op.dag() for op in plus_site)
    else:
        if basis.n_up >= 1 and basis.n_down >= 1:
            lowered = enumerate_sector(M, basis.n_up - 1, basis.n_down - 1)
            minus_site = tuple(_eta_plus_site(lowered, i).dag() for i in range(M))
        else:
            minus_site = tuple(zero_operator(basis) for _ in range(M))
    minus = _sum_ops(minus_site, basis)

    up = basis.up_masks
    down = basis.down_masks
    z_site = tuple(
        diagonal_operator(
            basis, 0.5 * (((up >> i) & 1) + ((down >> i) & 1) - 1.0)
        )
        for i in range(M)
    )
    z_total = diagonal_operator(
        basis, 0.5 * (_popcounts(up) + _popcounts(down) - M)
    )

    if minus.empty_image:
        pair = zero_operator(basis, basis)
        pair = SparseOperator(pair.matrix, basis, basis, hermitian=True)
    else:
        pair = SparseOperator(
            minus.dag().matrix @ minus.matrix, basis, basis, hermitian=True
        )
    return EtaOperators(basis, plus_site, minus_site, z_site, plus, minus, z_total, pair)


def _popcounts(masks):
    out = np.zeros(masks.shape, dtype=np.float64)
    work = masks.copy()
    while np.any(work):
        out += work & 1
        work >>= 1
    return out


@dataclass(frozen=True)
class SpinOperators:
    """Diagonal spin-z operators: s^z_i = n_up,i - n_down,i and the total."""

    basis: SectorBasis
    z_site: tuple
    z_total: SparseOperator


@lru_cache(maxsize=None)
def build_spin_ops(basis):
    up = basis.up_masks
    down = basis.down_masks
    z_site = tuple(
        diagonal_operator(basis, (((up >> i) & 1) - ((down >> i) & 1)).astype(float))
        for i in range(basis.M)
    )
    z_total = diagonal_operator(basis, _popcounts(up) - _popcounts(down))
    return SpinOperators(basis, z_site, z_total)


def occupation_diag(basis, site, spin):
    """Diagonal of n_{spin,site} over the basis, as a float array."""
    masks = basis.down_masks if _SPIN_OFFSET[spin] else basis.up_masks
    return ((masks >> site) & 1).astype(np.float64)


def double_occupancy_diag(basis, site):
    """Diagonal of n_up,site * n_down,site."""
    return (
        ((basis.up_masks >> site) & 1) & ((basis.down_masks >> site) & 1)
    ).astype(np.float64)
