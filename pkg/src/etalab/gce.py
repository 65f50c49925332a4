"""Generalized grand-canonical steady states over the conserved charges.

The steady-state family is rho ~ exp(mu1 eta+eta- + mu2 N_up + mu3 N_down).
All three charges commute and are block-diagonal over (N_up, N_down)
sectors, so the state is assembled from per-sector eigendecompositions of
eta+eta- and the multipliers are fixed by Newton iteration on the
moment-matching equations, whose exact Jacobian is the covariance matrix of
the charges. In fixed-sector mode N_up and N_down are deterministic and only
mu1 is solved.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BoundaryError, CapacityError, ConvergenceError, DomainError
from .evolve import DensityMatrix
from .fock import build_eta_ops, enumerate_sector
from .limits import DENSE_DIAG_LIMIT, dense_limit
from .observables import EtaCorrMatrix, sector_observables, structure_factor_from_corr

SOLVER_TOL = 1e-10
MAX_NEWTON = 200
MAX_HALVINGS = 60
EIG_CLUSTER = 1e-9


@dataclass
class GceTargets:
    """Conserved-charge targets; mode picks the state space."""

    eta_pair: float
    n_up: float
    n_down: float
    mode: str = "fixed-sector"

    def __post_init__(self):
        if self.mode not in ("fixed-sector", "full-space"):
            raise DomainError(f"unknown gce mode {self.mode!r}")


@dataclass
class SectorSpectrum:
    n_up: int
    n_down: int
    basis: object
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


@dataclass
class EtaPairSpectrum:
    """Per-sector eigendecomposition of eta+eta- (block-diagonal over sectors)."""

    M: int
    sectors: list

    def all_eigenvalues(self):
        return np.concatenate([s.eigenvalues for s in self.sectors])

    def distinct_count(self, tol=EIG_CLUSTER):
        count = 0
        for s in self.sectors:
            count += _cluster_count(s.eigenvalues, tol)
        return count


def _cluster_count(values, tol):
    vals = np.sort(np.asarray(values))
    if vals.size == 0:
        return 0
    return 1 + int(np.sum(np.diff(vals) > tol))


def etapair_spectrum(M, sector=None, limit=None):
    """Eigenvalues and eigenbasis of eta+eta-, per sector or over all sectors."""
    cap = dense_limit(DENSE_DIAG_LIMIT) if limit is None else limit
    if sector is not None:
        pairs = [tuple(sector)]
    else:
        pairs = [(nu, nd) for nu in range(M + 1) for nd in range(M + 1)]
    sectors = []
    for nu, nd in pairs:
        basis = enumerate_sector(M, nu, nd)
        if basis.dim > cap:
            raise CapacityError(
                f"sector ({nu},{nd}) has dim {basis.dim} > dense cap {cap}"
            )
        pair = build_eta_ops(basis).pair
        evals, evecs = np.linalg.eigh(pair.to_dense())
        evals = np.where(np.abs(evals) < 1e-12, 0.0, evals)  # operator is PSD
        sectors.append(SectorSpectrum(nu, nd, basis, evals, evecs))
    return EtaPairSpectrum(M=M, sectors=sectors)


@dataclass
class GceSolution:
    """Solved multipliers plus everything needed to evaluate observables."""

    mode: str
    M: int
    mu1: float
    mu2: float
    mu3: float
    targets: GceTargets
    spectrum: EtaPairSpectrum
    residuals: dict = field(default_factory=dict)

    def sector_weights(self):
        """[(SectorSpectrum, weight of sector, per-eigenvalue probs)] with
        weights summing to one across the state space."""
        if np.isinf(self.mu1):
            # boundary-limit state: uniform over the extremal eigenspace
            if len(self.spectrum.sectors) != 1:
                raise DomainError("boundary-limit states are fixed-sector only")
            s = self.spectrum.sectors[0]
            extreme = s.eigenvalues.max() if self.mu1 > 0 else s.eigenvalues.min()
            probs = (np.abs(s.eigenvalues - extreme) <= EIG_CLUSTER).astype(float)
            probs /= probs.sum()
            return [(s, 1.0, probs)]
        logs = []
        for s in self.spectrum.sectors:
            logs.append(self.mu1 * s.eigenvalues + self.mu2 * s.n_up + self.mu3 * s.n_down)
        shift = max(np.max(l) for l in logs)
        unnorm = [np.exp(l - shift) for l in logs]
        Z = sum(float(u.sum()) for u in unnorm)
        out = []
        for s, u in zip(self.spectrum.sectors, unnorm):
            w = float(u.sum()) / Z
            probs = u / u.sum() if u.sum() > 0 else u
            out.append((s, w, probs))
        return out

    def density_matrix(self):
        """Materialize rho (fixed-sector mode only)."""
        if self.mode != "fixed-sector" or len(self.spectrum.sectors) != 1:
            raise DomainError("density_matrix() needs fixed-sector mode")
        s, _, probs = self.sector_weights()[0]
        rho = (s.eigenvectors * probs) @ s.eigenvectors.conj().T
        return DensityMatrix(s.basis, rho)


def _moments_fixed(mu1, evals):
    x = mu1 * evals
    w = np.exp(x - x.max())
    w /= w.sum()
    mean = float(w @ evals)
    var = float(w @ (evals - mean) ** 2)
    return mean, var


def _solve_fixed_sector(evals, target, tol, boundary_tol=0.0):
    lo, hi = float(evals.min()), float(evals.max())
    if hi - lo < 1e-14:
        raise BoundaryError(
            f"eta+eta- is deterministic in this sector (value {lo}); "
            "no multiplier can move it",
            saturated="eta_pair",
        )
    if boundary_tol > 0.0:
        # closure of the exponential family: a target within boundary_tol of
        # an extremal eigenvalue means the limit state, uniform over the
        # extremal eigenspace (mu1 -> -inf at the bottom, +inf at the Yang top)
        if abs(target - lo) <= boundary_tol:
            return -np.inf, abs(target - lo)
        if abs(target - hi) <= boundary_tol:
            return np.inf, abs(target - hi)
    if not lo < target < hi:
        raise BoundaryError(
            f"target <eta+eta-> = {target} not strictly inside ({lo}, {hi}); "
            "the upper boundary is the pure Yang limit mu1 -> inf",
            saturated="eta_pair",
        )
    mu = 0.0
    mean, var = _moments_fixed(mu, evals)
    res = abs(mean - target)
    for _ in range(MAX_NEWTON):
        if res <= tol:
            return mu, res
        step = (target - mean) / max(var, 1e-300)
        trial = mu + step
        for _ in range(MAX_HALVINGS):
            t_mean, t_var = _moments_fixed(trial, evals)
            if abs(t_mean - target) < res:
                break
            step *= 0.5
            trial = mu + step
        else:
            return _bisect_fixed(evals, target, tol, mu)
        mu, mean, var, res = trial, t_mean, t_var, abs(t_mean - target)
    if res <= tol:
        return mu, res
    return _bisect_fixed(evals, target, tol, mu)


def _bisect_fixed(evals, target, tol, guess=0.0):
    # moment is monotone increasing in mu1, so bracket by doubling
    span = 1.0
    lo, hi = guess - span, guess + span
    for _ in range(200):
        if _moments_fixed(lo, evals)[0] < target:
            break
        span *= 2.0
        lo = guess - span
    span = 1.0
    for _ in range(200):
        if _moments_fixed(hi, evals)[0] > target:
            break
        span *= 2.0
        hi = guess + span
    mu = guess
    for _ in range(400):
        mu = 0.5 * (lo + hi)
        mean, _ = _moments_fixed(mu, evals)
        if abs(mean - target) <= tol:
            return mu, abs(mean - target)
        if mean < target:
            lo = mu
        else:
            hi = mu
    raise ConvergenceError(
        f"bisection stalled at residual {abs(mean - target):.3e}",
        residual=abs(mean - target),
        last_iterate=mu,
    )


def _full_space_stats(mu, spectrum):
    charges = []
    logs = []
    for s in spectrum.sectors:
        lam = s.eigenvalues
        charges.append(
            np.column_stack([lam, np.full_like(lam, s.n_up), np.full_like(lam, s.n_down)])
        )
        logs.append(mu[0] * lam + mu[1] * s.n_up + mu[2] * s.n_down)
    X = np.vstack(charges)
    logw = np.concatenate(logs)
    w = np.exp(logw - logw.max())
    w /= w.sum()
    mean = w @ X
    centered = X - mean
    cov = (centered * w[:, None]).T @ centered
    return mean, cov


def solve_multipliers(M, targets, tol=SOLVER_TOL, limit=None, spectrum=None, boundary_tol=0.0):
    """Newton iteration on the moment-matching equations.

    Fixed-sector mode solves mu1 only (N_up, N_down are deterministic and
    must be integers naming the sector). Full-space mode solves all three
    multipliers with the exact covariance Jacobian, damped by step halving.

    Targets must lie strictly inside the achievable open interval. With a
    positive boundary_tol, a fixed-sector target that close to an extremal
    eigenvalue of eta+eta- resolves to the limit state instead of raising:
    uniform over the extremal eigenspace, mu1 recorded as -inf/+inf. Ground
    states of the half-filled chain are exact eta singlets, so quenches from
    them sit exactly on the lower boundary and need this closure.
    """
    if targets.mode == "fixed-sector":
        nu, nd = targets.n_up, targets.n_down
        if abs(nu - round(nu)) > 1e-9 or abs(nd - round(nd)) > 1e-9:
            raise DomainError(
                "fixed-sector mode needs integer n_up, n_down naming the sector"
            )
        if spectrum is None:
            spectrum = etapair_spectrum(M, sector=(int(round(nu)), int(round(nd))), limit=limit)
        evals = spectrum.sectors[0].eigenvalues
        mu1, res = _solve_fixed_sector(evals, targets.eta_pair, tol, boundary_tol)
        return GceSolution(
            mode="fixed-sector",
            M=M,
            mu1=mu1,
            mu2=0.0,
            mu3=0.0,
            targets=targets,
            spectrum=spectrum,
            residuals={"eta_pair": res, "n_up": 0.0, "n_down": 0.0},
        )

    if spectrum is None:
        spectrum = etapair_spectrum(M, limit=limit)
    goal = np.array([targets.eta_pair, targets.n_up, targets.n_down])
    all_lam = spectrum.all_eigenvalues()
    ranges = {
        "eta_pair": (float(all_lam.min()), float(all_lam.max())),
        "n_up": (0.0, float(M)),
        "n_down": (0.0, float(M)),
    }
    for name, (lo, hi), val in zip(ranges, ranges.values(), goal):
        if not lo < val < hi:
            raise BoundaryError(
                f"target {name} = {val} not strictly inside ({lo}, {hi})",
                saturated=name,
            )
    mu = np.zeros(3)
    mean, cov = _full_space_stats(mu, spectrum)
    res = np.abs(mean - goal).max()
    for _ in range(MAX_NEWTON):
        if res <= tol:
            break
        try:
            step = np.linalg.solve(cov, goal - mean)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(cov, goal - mean, rcond=None)[0]
        trial = mu + step
        for _ in range(MAX_HALVINGS):
            t_mean, t_cov = _full_space_stats(trial, spectrum)
            if np.abs(t_mean - goal).max() < res:
                break
            step = 0.5 * step
            trial = mu + step
        else:
            raise ConvergenceError(
                f"full-space Newton stalled at residual {res:.3e}",
                residual=res,
                last_iterate=mu,
            )
        mu, mean, cov = trial, t_mean, t_cov
        res = np.abs(mean - goal).max()
    if res > tol:
        raise ConvergenceError(
            f"full-space Newton did not reach tol: residual {res:.3e}",
            residual=res,
            last_iterate=mu,
        )
    deltas = np.abs(mean - goal)
    return GceSolution(
        mode="full-space",
        M=M,
        mu1=float(mu[0]),
        mu2=float(mu[1]),
        mu3=float(mu[2]),
        targets=targets,
        spectrum=spectrum,
        residuals={"eta_pair": deltas[0], "n_up": deltas[1], "n_down": deltas[2]},
    )


UNIFORMITY_TOL = 1e-10


def gce_expectations(sol):
    """Observables of a solved GCE state.

    Returns the full correlation matrix, its (asserted uniform) off-diagonal
    value, per-site double occupancy, the structure factor, and <eta+eta->.
    The off-diagonal value also satisfies
    c = (<eta+eta-> - sum_i C_ii) / (M (M - 1)).
    """
    M = sol.M
    C = np.zeros((M, M), dtype=np.complex128)
    eta_pair = 0.0
    for s, w, probs in sol.sector_weights():
        if w == 0.0:
            continue
        rho = (s.eigenvectors * probs) @ s.eigenvectors.conj().T
        obs = sector_observables(s.basis)
        C += w * obs.corr_matrix_density(rho)
        eta_pair += w * float(probs @ s.eigenvalues)
    corr = EtaCorrMatrix(C)
    off = corr.offdiagonal()
    if off.size:
        spread = float(np.abs(off - off.mean()).max())
        if spread > UNIFORMITY_TOL * max(1.0, float(np.abs(off.mean()))):
            raise ConvergenceError(
                f"GCE off-diagonal correlations not uniform: spread {spread:.3e}"
            )
        uniform = complex(off.mean())
    else:
        uniform = 0.0 + 0.0j
    return {
        "corr": corr,
        "uniform_offdiag": uniform,
        "double_occupancy": np.real(np.diag(C)),
        "structure_factor": structure_factor_from_corr(corr),
        "eta_pair": eta_pair,
    }


def expectations_for_mu(M, sector, mu1):
    """GCE observables at a prescribed mu1 in a fixed sector (test hook)."""
    spectrum = etapair_spectrum(M, sector=sector)
    targets = GceTargets(
        eta_pair=float(_moments_fixed(mu1, spectrum.sectors[0].eigenvalues)[0]),
        n_up=sector[0],
        n_down=sector[1],
    )
    sol = GceSolution(
        mode="fixed-sector",
        M=M,
        mu1=float(mu1),
        mu2=0.0,
        mu3=0.0,
        targets=targets,
        spectrum=spectrum,
    )
    return gce_expectations(sol)
