"""Experiment harness: JSON configs, per-kind runners, CSV outputs.

One experiment per JSON config; all physical numbers in units of the
hopping tau. Outputs are plain CSVs with fixed schemas plus a manifest.json
that echoes the config and records derived values (field profiles, solver
residuals, measured decay windows). Reruns with the same config produce
byte-identical CSVs; the manifest additionally carries wall time.

CSV schemas (exact headers):
    corr_timeseries.csv   t,j,re,im,abs,stderr
    corr_matrix.csv       t,i,j,re,im,abs
    structure_factor.csv  t,n,qa,value
    spectrum.csv          re,im
    projection.csv        block,i,j,re,im,abs
    conserved.csv         t,eta_pair,n_up,n_down,s_z
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DomainError, ValidationError
from .evolve import (
    DensityMatrix,
    TrajectoryRun,
    ensemble_average,
    integrate_master,
    integrate_schrodinger_td,
)
from .fock import enumerate_full, enumerate_sector
from .gce import GceTargets, gce_expectations, solve_multipliers
from .model import (
    DriveParams,
    HubbardParams,
    build_field_op,
    build_hubbard,
    build_jumps,
    resolve_profile,
)
from .observables import (
    EtaCorrMatrix,
    check_sum_rules,
    distance_averaged_corr,
    project_sector_matrix,
    sector_observables,
)
from .spectra import ground_state, thermal_state
from .symmetry import (
    algebra_check,
    joint_projector_count,
    liouvillian_dense,
    steady_space_analysis,
    yang_state,
)

EXPERIMENTS = (
    "quench-dephasing",
    "thermal-projections",
    "floquet-vs-dephasing",
    "perturbation-window",
    "structure-factor",
    "liouvillian-spectrum",
    "gce-predict",
)

GCE_BOUNDARY_TOL = 1e-9
LATE_WINDOW_FRACTION = 0.2  # time-average window for long-time comparisons


@dataclass
class ExperimentConfig:
    experiment: str
    M: int
    n_up: int
    n_down: int
    tau: float = 1.0
    U: float = 1.0
    initial_state: dict = field(default_factory=lambda: {"kind": "ground", "U": 1.0})
    gamma_spin: float = 0.0
    gamma_charge: float = 0.0
    drive: dict = None
    dephasing: dict = None
    t_final: float = 0.0
    dt: float = 0.01
    output_times: object = None
    method: str = "master"
    n_trajectories: int = 0
    master_seed: int = 2024
    gce_mode: str = "fixed-sector"
    window_t_ref: float = 8.0
    target_eta_pair: float = None
    full_space: bool = False

    def echo(self):
        return {k: v for k, v in asdict(self).items()}


def parse_config(data):
    if not isinstance(data, dict):
        raise ValidationError("config", "top level must be a JSON object")
    known = set(ExperimentConfig.__dataclass_fields__)
    for key in data:
        if key not in known:
            raise ValidationError(key, "unknown config field")
    try:
        cfg = ExperimentConfig(**data)
    except TypeError as exc:
        raise ValidationError("config", str(exc)) from exc
    validate_config(cfg)
    return cfg


def load_config(path):
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError("config", f"invalid JSON: {exc}") from exc
    return parse_config(data)


def _resolve_grid(cfg):
    spec = cfg.output_times
    if spec is None:
        raise ValidationError("output_times", "required")
    if isinstance(spec, dict):
        for key in ("start", "stop", "num"):
            if key not in spec:
                raise ValidationError("output_times", f"missing {key!r}")
        grid = np.linspace(spec["start"], spec["stop"], int(spec["num"]))
    else:
        grid = np.asarray(spec, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValidationError("output_times", "must be a non-empty list of times")
    if np.any(np.diff(grid) <= 0):
        raise ValidationError("output_times", "times must be strictly increasing")
    if grid[0] < 0 or grid[-1] > cfg.t_final + 1e-9:
        raise ValidationError("output_times", "times must lie within [0, t_final]")
    return grid


def validate_config(cfg):
    if cfg.experiment not in EXPERIMENTS:
        raise ValidationError(
            "experiment", f"unknown kind {cfg.experiment!r}; pick one of {EXPERIMENTS}"
        )
    if cfg.M < 2:
        raise ValidationError("M", f"need at least 2 sites, got {cfg.M}")
    if not 0 <= cfg.n_up <= cfg.M:
        raise ValidationError("n_up", f"outside [0, {cfg.M}]")
    if not 0 <= cfg.n_down <= cfg.M:
        raise ValidationError("n_down", f"outside [0, {cfg.M}]")
    if cfg.tau <= 0:
        raise ValidationError("tau", "hopping must be positive")
    if cfg.gamma_spin < 0:
        raise ValidationError("gamma_spin", "rate must be non-negative")
    if cfg.gamma_charge < 0:
        raise ValidationError("gamma_charge", "rate must be non-negative")
    if cfg.gce_mode not in ("fixed-sector", "full-space"):
        raise ValidationError("gce_mode", f"unknown mode {cfg.gce_mode!r}")

    kind = cfg.initial_state.get("kind") if isinstance(cfg.initial_state, dict) else None
    if kind not in ("ground", "thermal", "yang"):
        raise ValidationError(
            "initial_state.kind", "must be 'ground', 'thermal' or 'yang'"
        )
    if kind in ("ground", "thermal") and "U" not in cfg.initial_state:
        raise ValidationError("initial_state.U", "required for ground/thermal")
    if kind == "thermal" and cfg.initial_state.get("beta", -1) < 0:
        raise ValidationError("initial_state.beta", "required and non-negative")
    if kind == "yang":
        N = cfg.initial_state.get("N")
        if N is None or not 0 <= N <= cfg.M:
            raise ValidationError("initial_state.N", f"needs 0 <= N <= {cfg.M}")
        if cfg.n_up != N or cfg.n_down != N:
            raise ValidationError("initial_state.N", "a Yang state lives in sector (N, N)")

    needs_evolution = cfg.experiment in (
        "quench-dephasing",
        "thermal-projections",
        "floquet-vs-dephasing",
        "perturbation-window",
        "structure-factor",
    )
    if needs_evolution:
        if cfg.t_final <= 0:
            raise ValidationError("t_final", "must be positive")
        if cfg.dt <= 0:
            raise ValidationError("dt", "must be positive")
        _resolve_grid(cfg)

    if cfg.experiment == "floquet-vs-dephasing":
        if not isinstance(cfg.drive, dict):
            raise ValidationError("drive", "required for driven experiments")
        try:
            drive = _drive_params(cfg)
            resolve_profile(drive, cfg.M)
        except DomainError as exc:
            raise ValidationError("drive", str(exc)) from exc
        if cfg.dt > 0.005:
            raise ValidationError("dt", "driven runs need dt <= 0.005")
        if kind == "thermal":
            raise ValidationError(
                "initial_state.kind", "driven evolution is closed; needs a pure state"
            )
    elif needs_evolution and cfg.dt > 0.01:
        raise ValidationError("dt", "master-equation runs need dt <= 0.01")

    if cfg.method not in ("master", "trajectories"):
        raise ValidationError("method", "must be 'master' or 'trajectories'")
    if cfg.method == "trajectories":
        if cfg.n_trajectories < 2:
            raise ValidationError("n_trajectories", "needs at least 2 trajectories")
        if kind == "thermal":
            raise ValidationError(
                "initial_state.kind", "trajectories need a pure initial state"
            )

    if cfg.experiment in ("thermal-projections",):
        if cfg.M % 2 or cfg.n_up != cfg.M // 2 or cfg.n_down != cfg.M // 2:
            raise ValidationError(
                "n_up", "projections need symmetric half filling (n_up = n_down = M/2)"
            )

    if cfg.experiment == "liouvillian-spectrum" and cfg.full_space and cfg.M > 2:
        raise ValidationError("M", "full-space Liouvillian spectra are capped at M = 2")
    return cfg


def _drive_params(cfg):
    d = dict(cfg.drive)
    return DriveParams(
        V=d.get("V"),
        Omega=d.get("Omega"),
        profile=d.get("profile", "linear"),
        seed=d.get("seed"),
        values=d.get("values"),
    )


# ---------------------------------------------------------------------------
# CSV plumbing


def _fmt(x):
    return repr(float(x))


def _write_csv(path, header, rows):
    lines = [header]
    for row in rows:
        lines.append(",".join(str(c) if isinstance(c, str) else _fmt(c) for c in row))
    Path(path).write_text("\n".join(lines) + "\n")


def write_corr_timeseries(path, records):
    """records: iterable of (t, j, complex value, stderr)."""
    rows = [(t, str(int(j)), v.real, v.imag, abs(v), se) for t, j, v, se in records]
    _write_csv(path, "t,j,re,im,abs,stderr", rows)


def write_corr_matrix(path, records):
    rows = []
    for t, C in records:
        M = C.shape[0]
        for i in range(M):
            for j in range(M):
                v = C[i, j]
                rows.append((t, str(i), str(j), v.real, v.imag, abs(v)))
    _write_csv(path, "t,i,j,re,im,abs", rows)


def write_structure_factor(path, records):
    rows = []
    for t, sf in records:
        for n, (qa, val) in enumerate(zip(sf.momenta, sf.values)):
            rows.append((t, str(n), qa, val))
    _write_csv(path, "t,n,qa,value", rows)


def write_conserved(path, records):
    rows = [
        (t, c["eta_pair"], c["n_up"], c["n_down"], c["s_z"]) for t, c in records
    ]
    _write_csv(path, "t,eta_pair,n_up,n_down,s_z", rows)


def write_spectrum(path, eigenvalues):
    ordered = sorted(eigenvalues, key=lambda z: (round(z.real, 12), round(z.imag, 12)))
    _write_csv(path, "re,im", [(z.real, z.imag) for z in ordered])


def write_projection(path, blocks):
    rows = []
    for blk in blocks:
        n = blk.matrix.shape[0]
        for i in range(n):
            for j in range(n):
                v = blk.matrix[i, j]
                rows.append((blk.block, str(i), str(j), v.real, v.imag, abs(v)))
    _write_csv(
        path,
        "block,i,j,re,im,abs",
        [(r[0], r[1], r[2], _fmt(r[3]), _fmt(r[4]), _fmt(r[5])) for r in rows],
    )


# ---------------------------------------------------------------------------
# measurement helpers


@dataclass
class WindowResult:
    """Decay window: time past t_ref until the series falls to a third."""

    delta_t: float
    censored: bool
    t_ref: float
    reference_value: float
    threshold: float


def measure_window(times, values, t_ref=8.0):
    """Delta t until `values` decays to reference/3, linearly interpolated.

    A series that never crosses the threshold within the data is flagged
    right-censored and delta_t is the lower bound set by the last sample.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.ndim != 1 or times.shape != values.shape:
        raise DomainError("times and values must be matching 1D arrays")
    if t_ref < times[0] or t_ref > times[-1]:
        raise DomainError(f"t_ref={t_ref} outside the sampled range")
    v_ref = float(np.interp(t_ref, times, values))
    threshold = v_ref / 3.0
    mask = times >= t_ref
    ts = times[mask]
    vs = values[mask]
    for k in range(1, len(ts)):
        if vs[k] <= threshold:
            if vs[k - 1] <= threshold:
                t_cross = ts[k - 1]
            else:
                frac = (vs[k - 1] - threshold) / (vs[k - 1] - vs[k])
                t_cross = ts[k - 1] + frac * (ts[k] - ts[k - 1])
            return WindowResult(
                delta_t=float(t_cross - t_ref),
                censored=False,
                t_ref=float(t_ref),
                reference_value=v_ref,
                threshold=threshold,
            )
    return WindowResult(
        delta_t=float(ts[-1] - t_ref),
        censored=True,
        t_ref=float(t_ref),
        reference_value=v_ref,
        threshold=threshold,
    )


def _initial_state(cfg, basis, params_factory):
    spec = cfg.initial_state
    kind = spec["kind"]
    derived = {}
    if kind == "ground":
        H0 = build_hubbard(params_factory(spec["U"]), basis)
        pair = ground_state(H0)
        derived["initial_energy"] = pair.value
        derived["ground_state_degenerate"] = pair.degenerate
        return pair.vector, derived
    if kind == "yang":
        return yang_state(cfg.M, int(spec["N"])), derived
    H0 = build_hubbard(params_factory(spec["U"]), basis)
    th = thermal_state(H0, float(spec["beta"]))
    derived["initial_energy"] = float(np.real(th.rho.expectation(H0)))
    return th.rho, derived


def _distance_rows(t, C, stderr_by_j=None):
    M = C.shape[0]
    rows = []
    for j in range(M):
        se = 0.0 if stderr_by_j is None else float(stderr_by_j[j])
        rows.append((t, j, distance_averaged_corr(C, j), se))
    return rows


def _gce_section(cfg, conserved):
    """Solve the GCE for the measured conserved targets; JSON-safe summary."""
    targets = GceTargets(
        eta_pair=conserved["eta_pair"],
        n_up=conserved["n_up"],
        n_down=conserved["n_down"],
        mode=cfg.gce_mode,
    )
    sol = solve_multipliers(
        cfg.M, targets, boundary_tol=GCE_BOUNDARY_TOL
    )
    exp = gce_expectations(sol)

    def _num(x):
        if np.isinf(x):
            return "inf" if x > 0 else "-inf"
        return float(x)

    section = {
        "mode": sol.mode,
        "mu1": _num(sol.mu1),
        "mu2": _num(sol.mu2),
        "mu3": _num(sol.mu3),
        "residuals": {k: float(v) for k, v in sol.residuals.items()},
        "boundary_tol": GCE_BOUNDARY_TOL,
        "uniform_offdiag_abs": abs(exp["uniform_offdiag"]),
        "eta_pair": float(exp["eta_pair"]),
        "double_occupancy": [float(x) for x in exp["double_occupancy"]],
    }
    return sol, exp, section


# ---------------------------------------------------------------------------
# experiment runners


def _jump_sets(cfg, basis):
    sets = []
    if cfg.gamma_spin > 0:
        sets.append(build_jumps("spin", basis, cfg.gamma_spin))
    if cfg.gamma_charge > 0:
        sets.append(build_jumps("charge", basis, cfg.gamma_charge))
    return sets


def _run_master_series(cfg, basis, rho0, H, jumps, grid):
    obs = sector_observables(basis)
    series = {"corr": [], "conserved": [], "sf": []}

    def on_sample(t, dm):
        result = obs.measure_density(dm)
        C = result["corr"]
        cons = {k: result[k] for k in ("eta_pair", "eta_z", "s_z", "n_up", "n_down")}
        sf = check_sum_rules(EtaCorrMatrix(C), cons["eta_pair"])
        series["corr"].append((t, C))
        series["conserved"].append((t, cons))
        series["sf"].append((t, sf))
        return dm

    last = {}

    def callback(t, dm):
        on_sample(t, dm)
        last["state"] = dm

    integrate_master(
        rho0, H, jumps, cfg.t_final, dt=cfg.dt, output_grid=grid, callback=callback
    )
    return series, last.get("state")


def _run_trajectory_series(cfg, basis, psi0, H, jumps, grid, threads):
    obs = sector_observables(basis)
    M = cfg.M

    def sample(psi):
        result = obs.measure_state(psi)
        C = result["corr"]
        dist = np.array([distance_averaged_corr(C, j) for j in range(M)])
        return {
            "corr": C,
            "dist_avg": dist,
            "conserved": np.array(
                [result[k] for k in ("eta_pair", "eta_z", "s_z", "n_up", "n_down")]
            ),
        }

    run = TrajectoryRun(
        psi0=psi0,
        H=H,
        jumps=jumps,
        t_final=cfg.t_final,
        dt=cfg.dt,
        output_grid=grid,
        sample=sample,
    )
    est = ensemble_average(run, cfg.n_trajectories, cfg.master_seed, threads=threads)
    series = {"corr": [], "conserved": [], "sf": [], "dist_stderr": []}
    for k, t in enumerate(est.times):
        C = est.mean["corr"][k]
        consv = est.mean["conserved"][k]
        cons = {
            "eta_pair": float(np.real(consv[0])),
            "eta_z": float(np.real(consv[1])),
            "s_z": float(np.real(consv[2])),
            "n_up": float(np.real(consv[3])),
            "n_down": float(np.real(consv[4])),
        }
        sf = check_sum_rules(EtaCorrMatrix(C), cons["eta_pair"])
        series["corr"].append((t, C))
        series["conserved"].append((t, cons))
        series["sf"].append((t, sf))
        series["dist_stderr"].append((t, est.stderr["dist_avg"][k]))
    return series, est


def _emit_series(out, series):
    ts_rows = []
    stderr_lookup = {t: se for t, se in series.get("dist_stderr", [])}
    for t, C in series["corr"]:
        se = stderr_lookup.get(t)
        ts_rows.extend(_distance_rows(t, C, se))
    write_corr_timeseries(out / "corr_timeseries.csv", ts_rows)
    write_corr_matrix(out / "corr_matrix.csv", series["corr"])
    write_structure_factor(out / "structure_factor.csv", series["sf"])
    write_conserved(out / "conserved.csv", series["conserved"])


def _window_series(series):
    """Mean over distances j >= 1 of |distance-averaged C| per output time."""
    times, values = [], []
    for t, C in series["corr"]:
        M = C.shape[0]
        vals = [abs(distance_averaged_corr(C, j)) for j in range(1, M)]
        times.append(t)
        values.append(float(np.mean(vals)))
    return np.array(times), np.array(values)


def run(cfg, out_dir, threads=1):
    """Execute one experiment; returns the output directory path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = time.time()
    manifest = {
        "config": cfg.echo(),
        "version": __version__,
        "experiment": cfg.experiment,
        "derived": {},
    }

    def params_factory(U):
        return HubbardParams(M=cfg.M, tau=cfg.tau, U=U)

    if cfg.experiment == "liouvillian-spectrum":
        _run_liouvillian(cfg, out, manifest)
    elif cfg.experiment == "gce-predict":
        _run_gce_predict(cfg, out, manifest, params_factory)
    elif cfg.experiment == "floquet-vs-dephasing":
        _run_floquet(cfg, out, manifest, params_factory, threads)
    else:
        _run_dephasing_family(cfg, out, manifest, params_factory, threads)

    manifest["wall_time_s"] = time.time() - started
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return out


def _run_dephasing_family(cfg, out, manifest, params_factory, threads):
    basis = enumerate_sector(cfg.M, cfg.n_up, cfg.n_down)
    manifest["derived"]["sector_dim"] = basis.dim
    grid = _resolve_grid(cfg)
    H = build_hubbard(params_factory(cfg.U), basis)
    jumps = _jump_sets(cfg, basis)
    init, derived = _initial_state(cfg, basis, params_factory)
    manifest["derived"].update(derived)

    if cfg.method == "trajectories":
        if isinstance(init, DensityMatrix):
            raise ValidationError("method", "trajectories need a pure initial state")
        series, est = _run_trajectory_series(cfg, basis, init, H, jumps, grid, threads)
        manifest["derived"]["n_trajectories"] = est.n
        manifest["derived"]["master_seed"] = cfg.master_seed
    else:
        rho0 = init if isinstance(init, DensityMatrix) else DensityMatrix.from_state(init)
        if cfg.experiment == "thermal-projections":
            write_projection(
                out / "projection_initial.csv",
                [
                    project_sector_matrix(rho0, "spin"),
                    project_sector_matrix(rho0, "doublon"),
                ],
            )
        series, final_state = _run_master_series(cfg, basis, rho0, H, jumps, grid)
        if cfg.experiment == "thermal-projections":
            write_projection(
                out / "projection.csv",
                [
                    project_sector_matrix(final_state, "spin"),
                    project_sector_matrix(final_state, "doublon"),
                ],
            )
    _emit_series(out, series)

    cons0 = series["conserved"][0][1]
    _, _, gce_section = _gce_section(cfg, cons0)
    manifest["gce"] = gce_section

    if cfg.experiment == "perturbation-window":
        times, values = _window_series(series)
        window = measure_window(times, values, t_ref=cfg.window_t_ref)
        manifest["window"] = {
            "delta_t": window.delta_t,
            "censored": window.censored,
            "t_ref": window.t_ref,
            "reference_value": window.reference_value,
            "threshold": window.threshold,
        }


def _run_floquet(cfg, out, manifest, params_factory, threads):
    basis = enumerate_sector(cfg.M, cfg.n_up, cfg.n_down)
    manifest["derived"]["sector_dim"] = basis.dim
    grid = _resolve_grid(cfg)
    obs = sector_observables(basis)
    drive = _drive_params(cfg)
    profile = resolve_profile(drive, cfg.M)
    manifest["derived"]["profile_values"] = [float(x) for x in profile]

    H = build_hubbard(params_factory(cfg.U), basis)
    F = build_field_op(drive, basis)
    init, derived = _initial_state(cfg, basis, params_factory)
    manifest["derived"].update(derived)

    def sample(psi):
        result = obs.measure_state(psi)
        return {
            "corr": result["corr"],
            "conserved": np.array(
                [result[k] for k in ("eta_pair", "eta_z", "s_z", "n_up", "n_down")]
            ),
        }

    times, samples, _ = integrate_schrodinger_td(
        init, H, F, drive, cfg.t_final, dt=cfg.dt, output_grid=grid, sample=sample
    )
    series = {"corr": [], "conserved": [], "sf": []}
    for k, t in enumerate(times):
        C = samples["corr"][k]
        consv = samples["conserved"][k]
        cons = {
            "eta_pair": float(np.real(consv[0])),
            "eta_z": float(np.real(consv[1])),
            "s_z": float(np.real(consv[2])),
            "n_up": float(np.real(consv[3])),
            "n_down": float(np.real(consv[4])),
        }
        sf = check_sum_rules(EtaCorrMatrix(C), cons["eta_pair"])
        series["corr"].append((t, C))
        series["conserved"].append((t, cons))
        series["sf"].append((t, sf))
    _emit_series(out, series)

    cons0 = series["conserved"][0][1]
    _, gce_exp, gce_section = _gce_section(cfg, cons0)
    manifest["gce"] = gce_section
    write_corr_matrix(out / "gce_corr_matrix.csv", [(0.0, gce_exp["corr"].values)])

    # time-averaged late-window comparison against the GCE prediction
    t_lo = cfg.t_final * (1.0 - LATE_WINDOW_FRACTION)
    mask = times >= t_lo - 1e-9
    late = np.mean([series["corr"][k][1] for k in np.nonzero(mask)[0]], axis=0)
    gce_abs = np.abs(gce_exp["corr"].values)
    deviation = np.abs(np.abs(late) - gce_abs)
    offmask = ~np.eye(cfg.M, dtype=bool)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(gce_abs > 0, deviation / gce_abs, np.inf)
    manifest["late_window"] = {
        "t_window": [float(t_lo), float(cfg.t_final)],
        "mean_abs_offdiag": float(np.abs(late)[offmask].mean()),
        "gce_abs_offdiag": float(gce_abs[offmask].mean()),
        "max_rel_deviation_offdiag": float(rel[offmask].max()),
    }

    if cfg.dephasing:
        deph_cfg = dict(cfg.dephasing)
        sub = ExperimentConfig(
            experiment="quench-dephasing",
            M=cfg.M,
            n_up=cfg.n_up,
            n_down=cfg.n_down,
            tau=cfg.tau,
            U=deph_cfg.get("U", cfg.initial_state.get("U", cfg.U)),
            initial_state=cfg.initial_state,
            gamma_spin=deph_cfg.get("gamma", 2.0),
            t_final=cfg.t_final,
            dt=deph_cfg.get("dt", 0.01),
            output_times=cfg.output_times,
            method="master",
            gce_mode=cfg.gce_mode,
        )
        validate_config(sub)
        basis2 = enumerate_sector(sub.M, sub.n_up, sub.n_down)
        H2 = build_hubbard(HubbardParams(M=sub.M, tau=sub.tau, U=sub.U), basis2)
        jumps2 = _jump_sets(sub, basis2)
        init2, _ = _initial_state(sub, basis2, lambda U: HubbardParams(M=sub.M, tau=sub.tau, U=U))
        rho0 = init2 if isinstance(init2, DensityMatrix) else DensityMatrix.from_state(init2)
        series2, _ = _run_master_series(sub, basis2, rho0, H2, jumps2, _resolve_grid(sub))
        rows = []
        for t, C in series2["corr"]:
            rows.extend(_distance_rows(t, C))
        write_corr_timeseries(out / "corr_timeseries_dephasing.csv", rows)


def _run_liouvillian(cfg, out, manifest):
    if cfg.full_space:
        basis = enumerate_full(cfg.M)
    else:
        basis = enumerate_sector(cfg.M, cfg.n_up, cfg.n_down)
    manifest["derived"]["basis_dim"] = basis.dim
    H = build_hubbard(HubbardParams(M=cfg.M, tau=cfg.tau, U=cfg.U), basis)
    jumps = _jump_sets(cfg, basis)
    superop = liouvillian_dense(H, jumps)
    spec = steady_space_analysis(superop)
    write_spectrum(out / "spectrum.csv", spec.eigenvalues)
    manifest["spectrum"] = {
        "kernel_dim": spec.kernel_dim,
        "max_real": spec.max_real,
        "imaginary_count": int(spec.imaginary.size),
        "ladder_spacing": spec.spacing,
        "ladder_residual": spec.spacing_residual,
    }
    if cfg.full_space and cfg.gamma_charge == 0:
        manifest["spectrum"]["joint_projector_count"] = joint_projector_count(cfg.M)
    if cfg.M <= 3:
        manifest["spectrum"]["measured_mu"] = algebra_check(
            cfg.M, U=cfg.U, tau=cfg.tau
        ).measured_mu


def _run_gce_predict(cfg, out, manifest, params_factory):
    basis = enumerate_sector(cfg.M, cfg.n_up, cfg.n_down)
    manifest["derived"]["sector_dim"] = basis.dim
    if cfg.target_eta_pair is not None:
        conserved = {
            "eta_pair": float(cfg.target_eta_pair),
            "n_up": float(cfg.n_up),
            "n_down": float(cfg.n_down),
        }
    else:
        init, derived = _initial_state(cfg, basis, params_factory)
        manifest["derived"].update(derived)
        obs = sector_observables(basis)
        result = obs.measure(init)
        conserved = {k: result[k] for k in ("eta_pair", "n_up", "n_down")}
    _, exp, section = _gce_section(cfg, conserved)
    manifest["gce"] = section
    write_corr_matrix(out / "corr_matrix.csv", [(0.0, exp["corr"].values)])
    sf = exp["structure_factor"]
    write_structure_factor(out / "structure_factor.csv", [(0.0, sf)])
