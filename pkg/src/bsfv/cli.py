"""Command-line entry point ``bsfv``.

Exit codes: 0 success, 1 invalid configuration, 2 solver failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import harness
from .harness import ConfigError, RunConfig, StudySpec
from .mesh import MeshError
from .stepper import SolverError

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2

# flag -> RunConfig field
FLAG_FIELDS = {
    "scheme": "scheme", "n": "n_interior", "m": "m_steps", "theta": "theta", "r": "r",
    "sigma": "sigma", "strike": "strike", "maturity": "maturity", "xmax": "x_max",
    "mesh": "mesh", "ratio": "ratio", "out": "out",
}


def _int_list(text: str) -> list[int]:
    try:
        return [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value file; flags override its entries")
    p.add_argument("--scheme", choices=harness.SCHEMES)
    p.add_argument("--n", type=int, help="interior node count")
    p.add_argument("--m", type=int, help="time step count")
    p.add_argument("--theta", type=float)
    p.add_argument("--r", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--strike", type=float)
    p.add_argument("--maturity", type=float)
    p.add_argument("--xmax", type=float)
    p.add_argument("--mesh", choices=harness.MESH_FAMILIES)
    p.add_argument("--ratio", type=float, help="growth ratio of the geometric mesh")
    p.add_argument("--out", help="output directory")


class _Parser(argparse.ArgumentParser):
    """Usage errors are configuration errors (exit 1, not argparse's 2)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bsfv", description="Finite-volume Black-Scholes solver")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="single solve, writes solution.csv")
    _add_run_flags(p)
    p.add_argument("--oracle-self-test", action="store_true",
                   help="replace the numerical slice by the closed form (all errors must be 0)")

    p = sub.add_parser("converge-space", help="refine N at fixed dt, writes space_errors.csv")
    _add_run_flags(p)
    p.add_argument("--values", type=_int_list, default=[100, 200, 400])
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--schemes", default="tpfa,fitted")

    p = sub.add_parser("converge-time", help="refine M at fixed h, writes time_errors.csv")
    _add_run_flags(p)
    p.add_argument("--values", type=_int_list, default=[100, 200, 400])
    p.add_argument("--h", type=float, default=0.25)
    p.add_argument("--schemes", default="tpfa,fitted")

    p = sub.add_parser("price", help="closed-form call price")
    _add_run_flags(p)
    p.add_argument("--spot", type=float, default=100.0)

    sub.add_parser("self-test", help="run the built-in property checks")
    return parser


def config_from_args(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    changes = {field: getattr(args, flag) for flag, field in FLAG_FIELDS.items()
               if getattr(args, flag, None) is not None}
    return cfg.replace(**changes).validate()


def _schemes(text: str) -> tuple[str, ...]:
    return tuple(s.strip() for s in text.split(",") if s.strip())


def _print_table(result: harness.StudyResult) -> None:
    print(",".join(result.header))
    for row in result.rows:
        print(",".join(harness.fmt(v) for v in row))


def dispatch(args) -> int:
    if args.command == "self-test":
        from . import verify

        checks = verify.run_all()
        for c in checks:
            print(c.line())
        return EXIT_OK if all(c.passed for c in checks) else EXIT_SOLVER

    cfg = config_from_args(args)
    if args.command == "solve":
        res = harness.run_single(cfg, self_test=args.oracle_self_test)
        print(res.summary())
        print(f"wrote {res.path}")
    elif args.command == "converge-space":
        spec = StudySpec("space", tuple(args.values), args.dt, _schemes(args.schemes))
        res = harness.run_space_study(spec, cfg)
        _print_table(res)
        print(f"wrote {res.path}")
    elif args.command == "converge-time":
        spec = StudySpec("time", tuple(args.values), args.h, _schemes(args.schemes))
        res = harness.run_time_study(spec, cfg)
        _print_table(res)
        for scheme in spec.schemes:
            print(f"plateau spread ({scheme}, rel): {res.plateau_spread(scheme):.4%}")
        print(f"wrote {res.path}")
    elif args.command == "price":
        print(harness.fmt(float(harness.run_price(args.spot, cfg))))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return dispatch(args)
    except (ConfigError, MeshError, ValueError, OSError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, ArithmeticError) as exc:
        step = getattr(exc, "step", None)
        where = f" at step {step}" if step is not None else ""
        print(f"solver failure{where}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
