"""Command-line entry point: ``tl1pce <subcommand> [options]``.

Every subcommand writes one CSV, to ``--out`` or standard output.  A
``--config`` file of ``key = value`` lines supplies defaults; flags given on
the command line take precedence.  The worker count comes from the
``TL1PCE_WORKERS`` environment variable.
"""

import argparse
import configparser
import csv
import io
import logging
import sys
from pathlib import Path

from ._validation import DomainError, SizeError, SolverError
from .basis import assemble_matrix, enumerate_total_degree, sample_uniform
from .harness import (
    ExperimentSpec,
    emit_contour_grid,
    records_to_csv,
    run_function_experiment,
    run_success_experiment,
)
from .solvers import METHODS
from .theory import error_constants, ric_bruteforce, tl1_rip_threshold

logger = logging.getLogger("tl1pce")


def _int_list(text):
    try:
        return tuple(int(v) for v in text.replace(" ", "").split(",") if v)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text):
    try:
        return tuple(float(v) for v in text.replace(" ", "").split(",") if v)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _method_list(text):
    methods = tuple(v for v in text.replace(" ", "").split(",") if v)
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown method(s) {bad}; choose from {METHODS}")
    return methods


def read_config(path):
    """Parse ``key = value`` lines into a dict with normalized keys."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    text = Path(path).read_text()
    parser.read_string("[tl1pce]\n" + text, source=str(path))
    return {k.replace("-", "_"): v for k, v in parser["tl1pce"].items()}


def _common(p, m_grid="", s_grid="", methods="TL1,L1minus2,L1"):
    p.add_argument("--d", type=int, default=2, help="stochastic dimension")
    p.add_argument("--k", type=int, default=20, help="total degree")
    p.add_argument("--s", type=int, default=10, help="sparsity of planted targets")
    p.add_argument("--m", type=int, default=70, help="number of samples")
    p.add_argument("--m-grid", type=_int_list, default=m_grid, help="comma-separated M values")
    p.add_argument("--s-grid", type=_int_list, default=s_grid, help="comma-separated s values")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--methods", type=_method_list, default=methods)
    p.add_argument("--a", type=float, default=0.3, help="TL1 parameter for fixed-a runs")
    p.add_argument("--candidates", type=_float_list, default=None,
                   help="candidate a values for adaptive TL1")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=None, help="output CSV (default: stdout)")
    p.add_argument("--config", type=Path, default=None, help="key = value defaults file")
    p.add_argument("--timing", action="store_true", help="fill the wall_ms column")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(prog="tl1pce", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("success-vs-m", help="success rate against sample count")
    _common(p, m_grid="40,50,60,70,80,90,100")
    p = sub.add_parser("success-vs-s", help="success rate against sparsity")
    _common(p, s_grid="5,10,15,20,25,30")
    p = sub.add_parser("error-vs-m", help="approximation error of an analytic function")
    _common(p, m_grid="20,40,60,80,100,120", methods="adaptiveTL1,L1minus2,L1")
    p.add_argument("--target", choices=("f1", "f2", "planted_sparse"), default="f2")
    p.add_argument("--n-validation", type=int, default=2000)
    p = sub.add_parser("contour", help="TL1 and l1 values on a square grid")
    _common(p)
    p.add_argument("--half-width", type=float, default=1.0)
    p.add_argument("--resolution", type=int, default=101)
    p = sub.add_parser("ric", help="brute-force restricted isometry constants")
    _common(p, s_grid="1,2")
    p.add_argument("--raw", action="store_true",
                   help="use the unscaled matrix instead of A / sqrt(M)")
    p = sub.add_parser("kdv", help="chaos surrogates of the forced KdV equation")
    _common(p, m_grid="30", methods="adaptiveTL1,L1minus2,L1")
    p.set_defaults(trials=10)
    p.add_argument("--nu", type=float, default=1.0)
    p.add_argument("--x0", type=float, default=0.0)
    p.add_argument("--sigma", type=float, default=0.1)
    p.add_argument("--corr-length", type=float, default=0.25)
    p.add_argument("--nx", type=int, default=256)
    p.add_argument("--dt", type=float, default=1e-4)
    p.add_argument("--n-validation", type=int, default=100)
    return parser


def parse_args(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config is not None:
        conf = read_config(args.config)
        subparser = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in subparser._actions}
        unknown = sorted(set(conf) - known)
        if unknown:
            parser.error(f"unknown config key(s): {', '.join(unknown)}")
        # string defaults are run through each option's type by argparse
        subparser.set_defaults(**conf)
        args = parser.parse_args(argv)
    return args


def _write(args, text):
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(text)


def _spec(args, kind, sweep, **extra):
    return ExperimentSpec(kind=kind, d=args.d, k=args.k, sweep_values=sweep, trials=args.trials,
                          methods=args.methods, a=args.a, candidates=args.candidates,
                          seed=args.seed, **extra)


def _ric_table(args):
    basis = enumerate_total_degree(args.d, args.k)
    A = assemble_matrix(basis, sample_uniform(args.d, args.m, args.seed),
                        normalize=not args.raw).entries
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["s", "delta_s", "n_supports", "a", "threshold", "admissible", "C0", "C1"])
    threshold = tl1_rip_threshold(args.a)
    for s in args.s_grid:
        est = ric_bruteforce(A, s)
        row = [s, repr(est.delta_s), est.n_supports, repr(args.a), repr(threshold)]
        if est.delta_s < 1.0:
            const = error_constants(args.a, est.delta_s)
            row.append("1" if const.admissible else "0")
            row += [repr(const.C0), repr(const.C1)] if const.admissible else ["", ""]
        else:
            row += ["0", "", ""]
        writer.writerow(row)
    return buf.getvalue()


def _run_kdv(args):
    from .kdv import KdVSettings, kdv_uq_experiment

    settings = KdVSettings(nu=args.nu, x0=args.x0, sigma=args.sigma,
                           corr_length=args.corr_length, n_x=args.nx, dt=args.dt)
    result = kdv_uq_experiment(d=args.d, k=args.k, M_grid=args.m_grid, trials=args.trials,
                               seed=args.seed, settings=settings,
                               n_validation=args.n_validation, methods=args.methods,
                               candidates=args.candidates)
    folder = args.out.parent if args.out is not None else Path.cwd()
    folder.mkdir(parents=True, exist_ok=True)
    for method in args.methods:
        (folder / f"coef_{method}.csv").write_text(result.coefficient_csv(method))
    return records_to_csv(result.records, timing=False)


def run(args):
    cmd = args.command
    if cmd == "success-vs-m":
        spec = _spec(args, "success_vs_M", args.m_grid, s_fixed=args.s)
        return records_to_csv(run_success_experiment(spec), args.timing)
    if cmd == "success-vs-s":
        spec = _spec(args, "success_vs_s", args.s_grid, M_fixed=args.m)
        return records_to_csv(run_success_experiment(spec), args.timing)
    if cmd == "error-vs-m":
        spec = _spec(args, "error_vs_M", args.m_grid, s_fixed=args.s, target=args.target,
                     n_validation=args.n_validation)
        return records_to_csv(run_function_experiment(spec), args.timing)
    if cmd == "contour":
        return emit_contour_grid(args.a, args.half_width, args.resolution)
    if cmd == "ric":
        return _ric_table(args)
    return _run_kdv(args)


def main(argv=None):
    args = parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        text = run(args)
    except (DomainError, SizeError, SolverError) as exc:
        print(f"tl1pce: error: {exc}", file=sys.stderr)
        return 2
    _write(args, text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
