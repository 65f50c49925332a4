"""Command-line entry point.

    etalab run <config.json> [--out DIR] [--threads K]
    etalab validate <config.json>
    etalab gce --M M --sector NU,ND --target-eta-pair X [--full-space] [--out DIR]

Exit codes: 0 ok, 2 validation error, 3 capacity error, 4 numerical
instability. ETALAB_DENSE_LIMIT overrides the dense-dimension caps.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import CapacityError, DomainError, NumericalInstabilityError

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_CAPACITY = 3
EXIT_NUMERICAL = 4


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="etalab",
        description="Eta-pairing steady states of dephased and driven Hubbard chains",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config", type=Path)
    p_run.add_argument("--out", type=Path, default=None, help="output directory")
    p_run.add_argument("--threads", type=int, default=1, help="trajectory parallelism")

    p_val = sub.add_parser("validate", help="validate a config without running")
    p_val.add_argument("config", type=Path)

    p_gce = sub.add_parser("gce", help="solve the grand-canonical multipliers")
    p_gce.add_argument("--M", type=int, required=True)
    p_gce.add_argument("--sector", type=str, required=True, help="NU,ND")
    p_gce.add_argument("--target-eta-pair", type=float, required=True)
    p_gce.add_argument("--full-space", action="store_true")
    p_gce.add_argument("--out", type=Path, default=None)
    return parser


def _cmd_run(args):
    from .harness import load_config, run

    cfg = load_config(args.config)
    out = args.out if args.out is not None else args.config.with_suffix("")
    result = run(cfg, out, threads=max(1, args.threads))
    print(f"wrote {result}")
    return EXIT_OK


def _cmd_validate(args):
    from .harness import load_config

    cfg = load_config(args.config)
    print(f"ok: {cfg.experiment} (M={cfg.M}, sector=({cfg.n_up},{cfg.n_down}))")
    return EXIT_OK


def _cmd_gce(args):
    from .harness import ExperimentConfig, run, validate_config

    try:
        nu, nd = (int(x) for x in args.sector.split(","))
    except ValueError as exc:
        raise DomainError(f"--sector must be NU,ND integers, got {args.sector!r}") from exc
    cfg = ExperimentConfig(
        experiment="gce-predict",
        M=args.M,
        n_up=nu,
        n_down=nd,
        gce_mode="full-space" if args.full_space else "fixed-sector",
        target_eta_pair=args.target_eta_pair,
    )
    validate_config(cfg)
    if args.out is not None:
        run(cfg, args.out)
        manifest = json.loads((Path(args.out) / "manifest.json").read_text())
        print(json.dumps(manifest["gce"], indent=2, sort_keys=True))
    else:
        from .gce import GceTargets, gce_expectations, solve_multipliers
        from .harness import GCE_BOUNDARY_TOL

        targets = GceTargets(
            eta_pair=args.target_eta_pair,
            n_up=float(nu),
            n_down=float(nd),
            mode=cfg.gce_mode,
        )
        sol = solve_multipliers(args.M, targets, boundary_tol=GCE_BOUNDARY_TOL)
        exp = gce_expectations(sol)
        print(
            json.dumps(
                {
                    "mode": sol.mode,
                    "mu1": repr(sol.mu1),
                    "mu2": sol.mu2,
                    "mu3": sol.mu3,
                    "residuals": {k: float(v) for k, v in sol.residuals.items()},
                    "uniform_offdiag_abs": abs(exp["uniform_offdiag"]),
                    "eta_pair": exp["eta_pair"],
                },
                indent=2,
                sort_keys=True,
            )
        )
    return EXIT_OK


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {"run": _cmd_run, "validate": _cmd_validate, "gce": _cmd_gce}
    try:
        return handlers[args.command](args)
    except NumericalInstabilityError as exc:
        print(f"numerical instability: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (DomainError, FileNotFoundError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
