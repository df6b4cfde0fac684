"""Command-line entry point ``lsreg``.

Exit codes: 0 success, 1 failed checks, 2 invalid configuration or usage,
3 PDE solver failure, 4 file I/O error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from ..elliptic import SolverError
from ..inversion import InversionAborted
from .checks import CHECKS, run_checks
from .config import ConfigError, load_config
from .experiment import build_setup, check_stability, run_experiment, sweep_noise, synthesize
from .io import write_field_csv, write_trace_csv

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 1, 2, 3, 4

log = logging.getLogger("lsreg")


def _out(args, cfg) -> Path:
    out = Path(args.out if args.out is not None else cfg["out.dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_phantom(args) -> int:
    cfg = load_config(args.config)
    setup = build_setup(cfg)
    u_true, state, _, _, _ = synthesize(setup)
    out = _out(args, cfg)
    write_field_csv(out / "u_true.csv", u_true, setup.grid)
    write_field_csv(out / "phi_true.csv", state.phi, setup.grid)
    write_field_csv(out / "psi1_true.csv", state.psi1, setup.grid)
    write_field_csv(out / "psi2_true.csv", state.psi2, setup.grid)
    print(f"wrote phantom to {out}")
    return EXIT_OK


def cmd_forward(args) -> int:
    cfg = load_config(args.config)
    setup = build_setup(cfg)
    _, _, y, _, _ = synthesize(setup)
    out = _out(args, cfg)
    write_trace_csv(out / "data_clean.csv", y, setup.grid)
    print(f"wrote clean data to {out / 'data_clean.csv'}")
    return EXIT_OK


def cmd_invert(args) -> int:
    cfg = load_config(args.config)
    out = _out(args, cfg)
    res = run_experiment(cfg, out)
    final = res["final"]
    err = final["l1_error_u"]
    print(f"stop={res['stop_reason']} iterations={res['iterations']} alpha={res['alpha']:.4g} "
          f"misfit={final['misfit']:.4e} l1_error_u={err:.4f} time={res['wall_time']:.1f}s")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    out = _out(args, cfg)
    try:
        rows = sweep_noise(cfg, args.deltas, out, jobs=args.jobs)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    for r in rows:
        print(f"delta={r['delta']:<6g} alpha={r['alpha']:<8.4g} misfit={r['final_misfit']:.4e} "
              f"l1_error_u={r['l1_error_u']:.4f} iterations={r['iterations']} {r['stop_reason']}")
    monotone, exact_best = check_stability(rows)
    print(f"l1 error non-increasing (5% slack): {monotone}; exact data has smallest misfit: {exact_best}")
    print(f"wrote {out / 'sweep.csv'}")
    return EXIT_OK


def cmd_check(args) -> int:
    results = run_checks(args.only or None)
    for r in results:
        print(f"{'PASS' if r.ok else 'FAIL'}  {r.name:<20} {r.detail}")
    return EXIT_OK if all(r.ok for r in results) else EXIT_CHECK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lsreg",
                                     description="Level-set Tikhonov reconstruction of piecewise "
                                                 "non-constant coefficients in 2D elliptic problems.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log every iteration")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_config(name, help_, fn):
        p = sub.add_parser(name, help=help_)
        p.add_argument("config", help="YAML experiment configuration")
        p.add_argument("--out", help="output directory (default: out.dir from the config)")
        p.set_defaults(func=fn)
        return p

    with_config("phantom", "write the true coefficient and level-set state", cmd_phantom)
    with_config("forward", "write noise-free boundary data", cmd_forward)
    with_config("invert", "run a full reconstruction", cmd_invert)
    p = with_config("sweep", "run one reconstruction per noise level", cmd_sweep)
    p.add_argument("--deltas", type=float, nargs="+", default=[0.04, 0.02, 0.01, 0.0],
                   help="relative noise levels, descending (default: 0.04 0.02 0.01 0)")
    p.add_argument("--jobs", type=int, default=1, help="parallel runs")
    p = sub.add_parser("check", help="run the quick invariant and oracle checks")
    p.add_argument("--only", nargs="+", choices=sorted(CHECKS), help="run only these checks")
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, InversionAborted) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
