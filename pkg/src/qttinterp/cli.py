"""Command-line interface: build, invert, ranks, bounds, experiment.

Exit codes: 0 success, 2 validation error, 3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .bounds import (Analytic, Bandlimited, Differentiable, interp_error_bound, rank_bound,
                     uniform_rank_bound)
from .cheb import ChebSystem
from .construct import (TruncationPolicy, construct_basic, construct_decay, construct_multires,
                        construct_multivariate, construct_rank_revealing)
from .cores import DangerTree, DecaySchedule
from .experiments import DEFAULTS, ExperimentConfig, format_csv, run_experiment
from .functions import function_names, get_function
from .invert import recover_grid, write_samples_csv
from .tt import (NumericalError, QTTFormatError, quantized_tensor, tt_read, tt_to_dense, tt_write,
                 unfolding_rank_profile)

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4

MODES = ("basic", "rr", "sparse", "decay", "multires")


def _shared() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("-K", "--depth", "--K", type=int, help="bits per variable")
    p.add_argument("-N", "--order", "--N", type=int, help="Chebyshev order")
    p.add_argument("--tol", type=float, default=0.0, help="truncation parameter eps")
    p.add_argument("-M", "--local-order", type=int, help="half-width of the local interpolation window")
    p.add_argument("--q", type=int, default=1, help="Lagrange depth for inversion")
    p.add_argument("--omega", type=float, help="bandlimit")
    p.add_argument("--delta", type=float, help="grid margin for the decay schedule")
    p.add_argument("--mode", choices=MODES, default="basic")
    p.add_argument("--ordering", choices=("interleaved", "serial"), default="interleaved")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output path (stdout if omitted, where allowed)")
    p.add_argument("--fn", help=f"registered function: {', '.join(function_names())}")
    p.add_argument("--J", type=int, default=25, help="terms of the random trig series")
    p.add_argument("--alpha", type=float, default=0.1, help="width parameter of peak/gaussian")
    p.add_argument("--freq", type=float, default=8.0, help="frequency (cycles) of cos/cos_sin")
    return p


def _need(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise ValueError("missing required option(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))


def cmd_build(args) -> int:
    _need(args, "fn", "depth", "out")
    entry = get_function(args.fn, J=args.J, seed=args.seed, alpha=args.alpha, omega=args.freq)
    K = args.depth
    if entry.dim > 1:
        _need(args, "order")
        if args.mode not in ("rr", "sparse"):
            raise ValueError("multivariate functions need --mode rr or sparse")
        if args.mode == "sparse":
            _need(args, "local_order")
        tt, rep = construct_multivariate(entry.fn, ChebSystem(args.order), entry.dim, K, args.ordering,
                                         TruncationPolicy(args.tol), sparse=args.mode == "sparse",
                                         M=args.local_order)
    elif args.mode == "decay":
        _need(args, "omega", "delta")
        tt, rep = construct_decay(entry.fn, DecaySchedule(args.omega, args.delta, K))
    else:
        _need(args, "order")
        sys_ = ChebSystem(args.order)
        if args.mode == "basic":
            tt, rep = construct_basic(entry.fn, sys_, K)
        elif args.mode == "rr":
            tt, rep = construct_rank_revealing(entry.fn, sys_, K, TruncationPolicy(args.tol))
        elif args.mode == "sparse":
            _need(args, "local_order")
            tt, rep = construct_rank_revealing(entry.fn, sys_, K, TruncationPolicy(args.tol),
                                               sparse=True, M=args.local_order)
        else:
            danger = {"left": DangerTree.left_edge, "right": DangerTree.right_edge}[args.danger](K)
            tt, rep = construct_multires(entry.fn, sys_, K, danger)
    with open(args.out, "wb") as fh:
        tt_write(tt, fh)
    print(json.dumps(rep.as_dict()))
    return EXIT_OK


def cmd_invert(args) -> int:
    _need(args, "order")
    with open(args.qtt, "rb") as fh:
        tt = tt_read(fh)
    samples = recover_grid(tt, ChebSystem(args.order), args.q, args.level)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            write_samples_csv(samples, fh)
    else:
        write_samples_csv(samples, sys.stdout)
    return EXIT_OK


def cmd_ranks(args) -> int:
    if args.qtt is not None:
        with open(args.qtt, "rb") as fh:
            dense = tt_to_dense(tt_read(fh))
    else:
        _need(args, "fn", "depth")
        entry = get_function(args.fn, J=args.J, seed=args.seed, alpha=args.alpha, omega=args.freq)
        if entry.dim != 1:
            raise ValueError("ranks of a function need a univariate function")
        dense = quantized_tensor(entry.fn, args.depth)
    profile = unfolding_rank_profile(dense, args.tol)
    print(" ".join(str(r) for r in profile))
    return EXIT_OK


def _spec_from(args):
    if args.cls == "differentiable":
        _need(args, "p", "C")
        return Differentiable(args.p, args.C)
    if args.cls == "analytic":
        _need(args, "rho", "B")
        return Analytic(args.rho, args.B)
    _need(args, "omega", "mu")
    return Bandlimited(args.omega, args.mu)


def cmd_bounds(args) -> int:
    spec = _spec_from(args)
    eps = args.eps if args.eps is not None else args.tol
    if eps <= 0:
        raise ValueError("bounds need --eps > 0")
    levels = range(0, (args.depth or 16))
    header = ["m", "rank_bound"] + (["error_bound"] if args.order else [])
    print(",".join(header))
    for m in levels:
        row = [str(m), str(rank_bound(spec, m, eps))]
        if args.order:
            row.append("%.17g" % interp_error_bound(spec, m, args.order))
        print(",".join(row))
    if isinstance(spec, Bandlimited):
        print(f"# uniform_rank_bound={uniform_rank_bound(spec, eps)}")
    return EXIT_OK


def _parse_list(text: str | None):
    if text is None:
        return None
    vals = [float(t) for t in text.split(",") if t.strip()]
    ints = [int(v) for v in vals if v == int(v)]
    return ints if len(ints) == len(vals) else vals


def cmd_experiment(args) -> int:
    params = {}
    flags = {"K": args.depth_list, "N": args.order_list, "J": args.J_list, "alpha": args.alpha_list,
             "M": args.local_order, "q": args.q_exp, "C": args.C_list, "tol": args.tol_exp}
    for key, raw in flags.items():
        if raw is None or key not in DEFAULTS[args.name]:
            continue
        val = _parse_list(raw) if isinstance(raw, str) else raw
        if isinstance(val, list) and len(val) == 1 and not isinstance(DEFAULTS[args.name][key], list):
            val = val[0]
        params[key] = val
    cfg = ExperimentConfig(args.name, params, args.seed, args.out)
    text = format_csv(cfg, run_experiment(cfg))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    shared = _shared()
    parser = argparse.ArgumentParser(prog="qttinterp",
                                     description="Interpolative construction of quantized tensor trains.")
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", parents=[shared], help="build a QTT and write it to --out")
    b.add_argument("--danger", choices=("left", "right"), default="left",
                   help="dangerous-interval chain for --mode multires")
    b.set_defaults(func=cmd_build)

    inv = sub.add_parser("invert", parents=[shared], help="recover Chebyshev-grid samples as CSV")
    inv.add_argument("qtt", help="QTT file")
    inv.add_argument("--level", type=int, help="target level m (default K - q)")
    inv.set_defaults(func=cmd_invert)

    r = sub.add_parser("ranks", parents=[shared], help="print the eps-rank profile of all unfoldings")
    r.add_argument("qtt", nargs="?", help="QTT file (or use --fn and -K)")
    r.set_defaults(func=cmd_ranks)

    bd = sub.add_parser("bounds", parents=[shared], help="print error and rank bounds per level")
    bd.add_argument("--class", dest="cls", required=True,
                    choices=("differentiable", "analytic", "bandlimited"))
    bd.add_argument("--p", type=int)
    bd.add_argument("--C", type=float)
    bd.add_argument("--rho", type=float)
    bd.add_argument("--B", type=float)
    bd.add_argument("--mu", type=float, default=2 * np.pi, help="total variation of the spectral measure")
    bd.add_argument("--eps", type=float, help="rank tolerance (alias for --tol)")
    bd.set_defaults(func=cmd_bounds)

    ex = sub.add_parser("experiment", help="run a registered experiment, CSV to --out")
    ex.add_argument("name", choices=sorted(DEFAULTS))
    ex.add_argument("--seed", type=int, default=0)
    ex.add_argument("--out")
    ex.add_argument("-K", "--depth", "--K", dest="depth_list", help="depth or comma list")
    ex.add_argument("-N", "--order", "--N", dest="order_list", help="order or comma list")
    ex.add_argument("--J", dest="J_list", help="trig terms or comma list")
    ex.add_argument("--alpha", dest="alpha_list", help="alpha or comma list")
    ex.add_argument("-M", "--local-order", type=int)
    ex.add_argument("--q", dest="q_exp", type=int)
    ex.add_argument("--C", dest="C_list", help="peak-sparse constants, comma list")
    ex.add_argument("--tol", dest="tol_exp", type=float)
    ex.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except QTTFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NumericalError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
