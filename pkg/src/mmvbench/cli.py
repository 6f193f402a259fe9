"""Command line entry point: ``mmvbench run|spark|erc|dictionary|construct``."""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from mmvbench.bench import DEFAULT_ALGORITHMS, ExperimentSpec, emit_results, run_experiment
from mmvbench.conditions import erc
from mmvbench.numerics import spark
from mmvbench.problem import (
    construct_nonunique_pair,
    construct_somp_defeating_instance,
    gen_dictionary,
    load_matrix,
    save_matrix,
)


def parse_int_list(text: str) -> list[int]:
    """Parse ``"1,2,4"``, ``"1..32"`` or mixtures such as ``"1..4,16,32"``."""
    values: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..", 1)
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise argparse.ArgumentTypeError(f"empty range {part!r}")
            values.extend(range(lo, hi + 1))
        else:
            values.append(int(part))
    if not values:
        raise argparse.ArgumentTypeError(f"no integers in {text!r}")
    return values


def _int_list(text: str) -> list[int]:
    try:
        return parse_int_list(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mmvbench", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Monte Carlo recovery sweep")
    run.add_argument("--n", type=int, default=256)
    run.add_argument("--m", type=int, default=32)
    run.add_argument("--l", type=_int_list, default=[1, 2, 4, 16, 32])
    run.add_argument("--k", type=_int_list, default=list(range(1, 33)))
    run.add_argument("--tau", default="full", help="'full' for min(k, l) or a list of ranks")
    run.add_argument("--algos", default=",".join(DEFAULT_ALGORITHMS))
    run.add_argument("--trials", type=int, default=100)
    run.add_argument("--seed", type=int, default=42)
    run.add_argument("--success-tol", type=float, default=1e-6)
    run.add_argument("--fix-dictionary", action="store_true",
                     help="draw one dictionary for the whole sweep")
    run.add_argument("--no-timing", action="store_true",
                     help="write wall_time_ms as 0 so output files are reproducible")
    run.add_argument("--threads", type=int, default=None,
                     help="worker processes (default: $MMVBENCH_THREADS or CPU count)")
    run.add_argument("--format", choices=("csv", "json"), default="csv")
    run.add_argument("--out", default="-")

    sp = sub.add_parser("spark", help="brute-force spark of a matrix fixture")
    sp.add_argument("--matrix", required=True)

    er = sub.add_parser("erc", help="exact recovery condition for a support")
    er.add_argument("--matrix", required=True)
    er.add_argument("--support", type=_int_list, required=True, help="zero-based atom indices")

    dic = sub.add_parser("dictionary", help="write a seeded Gaussian dictionary fixture")
    dic.add_argument("--m", type=int, required=True)
    dic.add_argument("--n", type=int, required=True)
    dic.add_argument("--seed", type=int, default=0)
    dic.add_argument("--out", required=True)

    con = sub.add_parser("construct", help="adversarial constructions")
    kinds = con.add_subparsers(dest="kind", required=True)
    nu = kinds.add_parser("nonunique", help="two k-sparse signals with equal measurements")
    nu.add_argument("--matrix", required=True)
    nu.add_argument("--k", type=int, required=True)
    nu.add_argument("--tau", type=int, required=True)
    nu.add_argument("--l", type=int, default=None)
    nu.add_argument("--spark", type=int, default=None)
    nu.add_argument("--out-x", required=True)
    nu.add_argument("--out-x-tilde", required=True)
    sd = kinds.add_parser("somp-defeat", help="rank-tau signal that SOMP misreads")
    sd.add_argument("--matrix", required=True)
    sd.add_argument("--support", type=_int_list, required=True)
    sd.add_argument("--tau", type=int, required=True)
    sd.add_argument("--l", type=int, required=True)
    sd.add_argument("--slack", type=float, default=0.5)
    sd.add_argument("--seed", type=int, default=0)
    sd.add_argument("--out", required=True)
    return parser


def _cmd_run(args) -> None:
    tau = "full" if args.tau == "full" else tuple(parse_int_list(args.tau))
    spec = ExperimentSpec(
        n=args.n, m=args.m, l_values=args.l, k_values=args.k, tau_rule=tau,
        trials=args.trials, algorithms=tuple(a.strip() for a in args.algos.split(",") if a.strip()),
        master_seed=args.seed, success_rel_tol=args.success_tol,
        fix_dictionary=args.fix_dictionary, record_timing=not args.no_timing,
    )
    rows = run_experiment(spec, threads=args.threads)
    emit_results(rows, args.format, args.out)


def _cmd_construct(args) -> None:
    Phi = load_matrix(args.matrix)
    if args.kind == "nonunique":
        X, X_tilde = construct_nonunique_pair(Phi, args.k, args.tau, l=args.l, spark_value=args.spark)
        save_matrix(args.out_x, X.entries)
        save_matrix(args.out_x_tilde, X_tilde.entries)
        print(f"support(X)={list(X.support)} support(X~)={list(X_tilde.support)} rank(X)={X.rank}")
    else:
        X = construct_somp_defeating_instance(
            Phi, args.support, args.tau, args.l, slack=args.slack, seed=args.seed
        )
        save_matrix(args.out, X.entries)
        print(f"support={list(X.support)} rank={X.rank}")


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            _cmd_run(args)
        elif args.command == "spark":
            print(spark(load_matrix(args.matrix)))
        elif args.command == "erc":
            print(f"{erc(load_matrix(args.matrix), args.support):.17g}")
        elif args.command == "dictionary":
            save_matrix(args.out, np.asarray(gen_dictionary(args.m, args.n, args.seed)))
        else:
            _cmd_construct(args)
    except (ValueError, OSError, LookupError, RuntimeError) as exc:
        print(f"mmvbench: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
