"""Command-line front end.

Exit codes: 0 success, 2 usage or invalid argument, and for solver and file
failures the ``exit_code`` of the raised :mod:`paratuck2.errors` class
(3 rank-deficient, 4 not-rank-one, 5 singular-recovery, 6 degenerate-pivot,
7 underdetermined, 8 degenerate-polynomial, 9 not-decomposable, 10 I/O,
11 parse, 12 numerical).
"""
import argparse
import json
import sys

from . import experiments
from .errors import ParaTuckError
from .model import random_instance

EXIT_USAGE = 2


def _dims(text):
    try:
        dims = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"dims must be N1,N2,N3, got {text!r}")
    if len(dims) != 3 or min(dims) < 1:
        raise argparse.ArgumentTypeError(f"dims must be three positive integers, got {text!r}")
    return dims


def build_parser():
    p = argparse.ArgumentParser(
        prog="paratuck2", description="Algebraic rank-(2,2) ParaTuck-2 decomposition."
    )
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="write a random rank-(2,2) model tensor")
    s.add_argument("--dims", type=_dims, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--output", required=True)
    s.add_argument("--factors", help="also write the ground-truth factors here")

    d = sub.add_parser("decompose", help="decompose a tensor file")
    d.add_argument("--input", required=True)
    d.add_argument("--output", required=True, help="factor file to write")
    d.add_argument("--tol", type=float, help="fail if the squared residual exceeds this")
    d.add_argument("--als-refine", type=int, default=0, metavar="K")
    d.add_argument("--report", help="write a JSON report here")

    r = sub.add_parser("repro-det", help="decompose the built-in worked example")
    r.add_argument("--als-refine", type=int, choices=(0, 1), default=0)
    r.add_argument("--report", required=True)

    m = sub.add_parser("monte-carlo", help="success rate over random trials")
    m.add_argument("--trials", type=int, required=True)
    m.add_argument("--dims", type=_dims, default=(10, 10, 15))
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--threshold", type=float, default=experiments.DEFAULT_THRESHOLD)
    m.add_argument("--method", choices=experiments.METHODS, default="algebraic")
    m.add_argument("--report", required=True)
    m.add_argument("--input", help="use this tensor for every trial instead of random instances")
    m.add_argument("--als-max-iters", type=int, default=5000)
    m.add_argument("--jobs", type=int, default=1)
    return p


def _summary(report):
    keys = ("status", "residual_abs", "residual_rel")
    return " ".join(f"{k}={report[k]}" for k in keys)


def _cmd_synth(args):
    if args.dims[2] < 10:
        print(f"error: N3 below 10 (got {args.dims[2]})", file=sys.stderr)
        return EXIT_USAGE
    if args.dims[0] < 2 or args.dims[1] < 2:
        print(f"error: N1 and N2 must be at least 2 (got {args.dims})", file=sys.stderr)
        return EXIT_USAGE
    f, T = random_instance(args.dims, args.seed)
    experiments.save_tensor(T, args.output)
    if args.factors:
        experiments.save_factors(f, args.factors)
    return 0


def _cmd_decompose(args):
    T = experiments.load_tensor(args.input)
    if args.als_refine < 0:
        print("error: --als-refine must be >= 0", file=sys.stderr)
        return EXIT_USAGE
    factors, report, error = experiments.run_decomposition(T, args.als_refine, args.tol)
    if factors is not None:
        experiments.save_factors(factors, args.output)
    if args.report:
        experiments._write_json(report, args.report)
    if error is not None:
        print(f"error: {error}", file=sys.stderr)
        return error.exit_code
    print(_summary(report))
    return 0


def _cmd_repro(args):
    report = experiments.run_deterministic_repro(args.als_refine, args.report)
    print(_summary(report))
    return report["exit_code"]


def _cmd_monte_carlo(args):
    if args.trials < 1:
        print("error: --trials must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    tensor = experiments.load_tensor(args.input) if args.input else None
    report = experiments.run_monte_carlo(
        args.trials, args.dims, args.seed, args.threshold, args.method, args.report,
        tensor=tensor, als_max_iters=args.als_max_iters, jobs=args.jobs,
    )
    print(json.dumps({"success_count": report["success_count"], "trials": args.trials}))
    return 0


COMMANDS = {
    "synth": _cmd_synth,
    "decompose": _cmd_decompose,
    "repro-det": _cmd_repro,
    "monte-carlo": _cmd_monte_carlo,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ParaTuckError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
