"""Command-line entry point.

Exit codes: 0 on success, 1 on a contract or verification failure (and on
solver breakdown), 2 on usage, parse or file errors.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .basis import Domain, build_bases
from .config import load_config
from .errors import ContractViolation, NonConvergence, StepRejected, VerificationFailure

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _cmd_run(args) -> int:
    from .output import run_to_directory

    cfg = load_config(args.config)
    traj, out = run_to_directory(cfg, args.out)
    final = traj.reports[-1]
    print(f"wrote {out}  steps={cfg.n_steps}  F_total={final.F_total:.10e}  "
          f"max Picard iterations={max(traj.iterations, default=0)}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    from . import sweeps

    cfg = load_config(args.config)
    values = {"sweep-rho": float, "sweep-delta": float, "refine-k": int, "refine-dt": float}[args.command]
    items = [values(v) for v in args.list]
    fn = {
        "sweep-rho": sweeps.rho_sweep,
        "sweep-delta": sweeps.delta_sweep,
        "refine-k": sweeps.k_refinement,
        "refine-dt": sweeps.dt_refinement,
    }[args.command]
    table = fn(cfg, items, workers=args.workers)
    if args.out:
        table.write_csv(args.out)
        print(f"wrote {args.out}")
    else:
        table.write_csv(sys.stdout)
    for name, ok in table.monotone.items():
        print(f"{name:<6s} differences strictly decreasing: {ok}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    from .verify import run_suite

    cfg = load_config(args.config)
    checks = run_suite(cfg)
    for c in checks:
        print(c.line())
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_FAIL


def _cmd_demo(args) -> int:
    lengths = (1.0,) * args.dim
    Z, Y = build_bases(Domain(lengths), args.k)
    for basis in (Z, Y):
        gram = np.abs(basis.gram() - np.eye(basis.k)).max()
        print(f"{basis.kind}-basis  k={basis.k}  max|G - I|={gram:.3e}")
        print("  eigenvalues: " + " ".join(f"{v:.6g}" for v in basis.eigenvalues))
    # a Gaussian bump that is negligible on the boundary suits both spans
    x = Z.quad.nodes
    f = np.exp(-np.sum((x - 0.6) ** 2, axis=1) / 0.02)
    for basis in (Z, Y):
        coeffs = basis.project(f).coeffs
        err = np.sqrt(basis.quad.integrate((basis.to_nodes(coeffs) - f) ** 2))
        print(f"{basis.kind}-projection L2 error of test function: {err:.3e}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="chbiot", description="Cahn-Hilliard-Biot spectral simulator")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate one configuration and write CSV output")
    r.add_argument("config")
    r.add_argument("--out", help="output directory (default: [output] directory)")
    r.set_defaults(func=_cmd_run)

    for name, help_ in (("sweep-rho", "regularisation sweep"), ("sweep-delta", "mollifier-width sweep"),
                        ("refine-k", "basis-size refinement"), ("refine-dt", "time-step refinement")):
        s = sub.add_parser(name, help=help_)
        s.add_argument("config")
        s.add_argument("--list", nargs="+", required=True, help="parameter values in sweep order")
        s.add_argument("--out", help="CSV file for the difference table (default: stdout)")
        s.add_argument("--workers", type=int, default=1)
        s.set_defaults(func=_cmd_sweep)

    v = sub.add_parser("verify", help="run the invariant and oracle checks")
    v.add_argument("config")
    v.set_defaults(func=_cmd_verify)

    d = sub.add_parser("demo-projection", help="print basis sanity information")
    d.add_argument("--dim", type=int, choices=(1, 2), default=1)
    d.add_argument("--k", type=int, default=8)
    d.set_defaults(func=_cmd_demo)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    if getattr(args, "config", None) is not None and not Path(args.config).is_file():
        print(f"error: config file not found: {args.config}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (ContractViolation, VerificationFailure, NonConvergence, StepRejected) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
