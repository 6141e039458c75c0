"""Command line: ``gen``, ``solve``, ``sweep`` and ``check``.

Exit status is 0 on success, 1 on a usage or parameter error and 2 on a
numeric failure (including a failed ``check``).
"""
from __future__ import annotations

import argparse
import math
import sys
from typing import List, Optional

from .core import Instance, NumericError, OutputChannel, ParameterError, PriorParams, Scaling
from .core import generate_instance
from .solvers import Algo, SolverConfig, solve

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def parse_grid(text: str) -> List[float]:
    """``"a:b:step"`` (inclusive of ``b`` up to rounding) or ``"v1,v2,..."``."""
    text = text.strip()
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) != 3:
                raise ValueError
            lo, hi, step = parts
            if not step > 0 or hi < lo:
                raise ValueError
            count = int(math.floor((hi - lo) / step + 1e-9)) + 1
            return [round(lo + k * step, 12) for k in range(count)]
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise UsageError(f"bad grid {text!r}; use a:b:step or a comma list") from None


def _add_solver_flags(p):
    p.add_argument("--algo", choices=[a.value for a in Algo], default="amp")
    p.add_argument("--max-iter", type=int, default=1000)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--damping", type=float, default=None)
    p.add_argument("--learn-delta", action="store_true")
    p.add_argument("--delta-init", type=float, default=None)
    p.add_argument("--continuation", type=int, default=None,
                   help="noise-variance stages for the minimizers")
    p.add_argument("--precondition", action="store_true",
                   help="diagonally rescaled L-BFGS in the minimizers")


def _config(args, seed_init="zeros") -> SolverConfig:
    algo = Algo(args.algo)
    learn = args.learn_delta or algo in (Algo.MF_LEARN, Algo.MINIMIZE_MF_LEARN)
    return SolverConfig(algo=algo, max_iter=args.max_iter, tol=args.tol, damping=args.damping,
                        learn_delta=learn, delta_init=args.delta_init, seed_init=seed_init,
                        continuation=args.continuation, precondition=args.precondition)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cs-variational", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="generate a random instance")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--delta0", type=float, default=1e-8)
    p.add_argument("--scaling", default="one-over-n", choices=[s.value for s in Scaling])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")

    p = sub.add_parser("solve", help="solve an instance file")
    p.add_argument("--instance", required=True)
    _add_solver_flags(p)
    p.add_argument("--init", choices=["zeros", "prior-mean", "random"], default="zeros")
    p.add_argument("--seed", type=int, default=0, help="seed for --init random")
    p.add_argument("--trace", action="store_true", help="include energy/delta traces")
    p.add_argument("--out")

    p = sub.add_parser("sweep", help="phase-diagram sweep to CSV")
    p.add_argument("--rho", required=True, help="grid, a:b:step or comma list")
    p.add_argument("--alpha", required=True, help="grid, a:b:step or comma list")
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--delta0", type=float, default=1e-8)
    p.add_argument("--scaling", default="unit-variance", choices=[s.value for s in Scaling])
    p.add_argument("--success-mse", type=float, default=1e-6)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trace", action="store_true", help="accepted for symmetry; sweeps keep no traces")
    _add_solver_flags(p)
    p.add_argument("--out")

    p = sub.add_parser("check", help="run the numerical property checks")
    p.add_argument("--full", action="store_true", help="full-size checks (slower)")
    p.add_argument("--out")
    return parser


def _emit(text: str, path: Optional[str]):
    if path:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_gen(args):
    inst = generate_instance(args.n, args.m, PriorParams(args.rho), args.delta0,
                             args.scaling, seed=args.seed)
    _emit(inst.to_json() + "\n", args.out)


def _cmd_solve(args):
    try:
        with open(args.instance) as fh:
            inst = Instance.from_json(fh.read())
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot read instance {args.instance!r}: {exc}") from None
    seed_init = ("random", args.seed) if args.init == "random" else args.init
    config = _config(args, seed_init)
    channel = None
    if config.algo is Algo.GAMP:
        channel = OutputChannel.awgn(config.delta_init or inst.delta0)
    report = solve(inst, config, channel)
    _emit(report.to_json(trace=args.trace) + "\n", args.out)


def _cmd_sweep(args):
    from .harness import SweepSpec, cells_to_csv, run_sweep

    spec = SweepSpec(rho_grid=parse_grid(args.rho), alpha_grid=parse_grid(args.alpha), n=args.n,
                     delta0=args.delta0, trials=args.trials, algo=_config(args),
                     success_mse=args.success_mse, workers=args.workers, seed=args.seed,
                     scaling=args.scaling)
    _emit(cells_to_csv(run_sweep(spec)), args.out)


def _cmd_check(args):
    from . import checks

    results = checks.full_suite() if args.full else checks.quick_suite()
    text = "".join(r.line() + "\n" for r in results)
    _emit(text, args.out)
    if not all(r.passed for r in results):
        raise NumericError(f"{sum(not r.passed for r in results)} check(s) failed")


COMMANDS = {"gen": _cmd_gen, "solve": _cmd_solve, "sweep": _cmd_sweep, "check": _cmd_check}


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
