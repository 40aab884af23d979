"""Command-line front end.

Subcommands: effect (compute and export effect curves), rebin (new
resolutions from a Jacobian cache), bench-case1 (evaluation-count and
wall-time scaling), bench-case2 (accuracy vs bin count on the clustered
synthetic), bike (bike-sharing pipeline) and gen (dump a synthetic
dataset to CSV).

Exit codes: 0 success, 2 usage, 3 data/parse/cache, 4 schema, 5 numeric.
"""

from __future__ import annotations

import argparse
import sys

from . import experiments
from .binning import AllocationError, EmptyBinError
from .curveio import CacheError
from .data import ParseError, SchemaError
from .models import DivergenceError, InputShapeError, ModelFileError, NumericError
from .oracles import MetricUndefinedError
from .synthdata import GeneratorSpec

EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_SCHEMA = 4
EXIT_NUMERIC = 5


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dale",
        description="Feature-effect estimation for differentiable models.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("effect", help="compute effect curves and write curve files")
    p.add_argument("--data", required=True, help="input CSV (header + numeric rows)")
    p.add_argument("--model", required=True,
                   help="builtin name (toy, ood-demo, case2) or MLP model file")
    p.add_argument("--method", required=True, choices=["dale", "ale", "pdp", "mplot"])
    p.add_argument("--feature", type=int, action="append",
                   help="feature index (repeatable; default: all)")
    p.add_argument("-K", "--bins", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory for curve files")
    p.add_argument("--empty-bin-policy", default="interpolate",
                   choices=["interpolate", "zero", "fail"])
    p.add_argument("--cache-out", default=None,
                   help="also write the Jacobian cache here (method=dale only)")

    p = sub.add_parser("rebin", help="rebuild curves at new resolutions from a cache")
    p.add_argument("--cache", required=True, help="jacobian cache file")
    p.add_argument("-K", "--bins", type=int, nargs="+", required=True)
    p.add_argument("--feature", type=int, action="append")
    p.add_argument("--out", required=True)
    p.add_argument("--empty-bin-policy", default="interpolate",
                   choices=["interpolate", "zero", "fail"])

    p = sub.add_parser("bench-case1", help="evaluation-count and wall-time scaling study")
    p.add_argument("--n", type=int, nargs="+", default=[1000])
    p.add_argument("--d", type=int, nargs="+", default=[2, 5, 10, 20, 50])
    p.add_argument("--l", type=int, nargs="+", default=[2])
    p.add_argument("-K", "--bins", type=int, default=100)
    p.add_argument("--width", type=int, default=256, help="hidden layer width")
    p.add_argument("--repetitions", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="report file")

    p = sub.add_parser("bench-case2", help="accuracy vs bin count on the clustered synthetic")
    p.add_argument("-K", "--bins", type=int, nargs="+", default=[1, 2, 3, 4, 5, 10, 20, 40])
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="report file")

    p = sub.add_parser("bike", help="bike-sharing pipeline (user-supplied CSV)")
    p.add_argument("--data", required=True, help="path to the hourly bike-sharing CSV")
    p.add_argument("--feature-subset", default=None,
                   help="comma-separated column names (default: the 11 standard ones)")
    p.add_argument("-K", "--bins", type=int, nargs="+", default=[25, 50, 100])
    p.add_argument("--reference-k", type=int, default=200)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--learning-rate", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("gen", help="dump a synthetic dataset to CSV")
    p.add_argument("--name", required=True, choices=["toy", "ood-demo", "case1", "case2"])
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--d", type=int, default=10, help="columns (case1 only)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output CSV path")
    return parser


def _cmd_effect(args) -> int:
    summary = experiments.run_effect(
        args.data, args.model, args.method, args.feature, args.bins, args.out,
        empty_policy=args.empty_bin_policy, seed=args.seed,
        cache_out=args.cache_out)
    print(f"method={summary['method']} n={summary['n']} d={summary['d']} k={summary['k']}")
    print(f"evaluations: value={summary['n_value']} gradient={summary['n_gradient']} "
          f"second={summary['n_second']}")
    print(f"seconds: {summary['seconds']:.4f}")
    for path in summary["files"]:
        print(f"wrote {path}")
    return 0


def _cmd_rebin(args) -> int:
    summary = experiments.run_rebin(
        args.cache, args.bins, args.out, features=args.feature,
        empty_policy=args.empty_bin_policy)
    print(f"evaluations: value={summary['n_value']} gradient={summary['n_gradient']} "
          f"second={summary['n_second']}")
    for path in summary["files"]:
        print(f"wrote {path}")
    return 0


def _cmd_bench_case1(args) -> int:
    rows = experiments.run_bench_case1(
        args.n, args.d, args.l, args.bins, args.repetitions,
        width=args.width, seed=args.seed)
    text = experiments.format_case1_report(rows)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(text)
    print(text, end="")
    print(f"wrote {args.out}")
    return 0


def _cmd_bench_case2(args) -> int:
    table = experiments.case2_nmse_table(args.bins, args.n, [args.seed])
    text = experiments.format_case2_report(table, args.n, [args.seed])
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(text)
    print(text, end="")
    print(f"wrote {args.out}")
    return 0


def _cmd_bike(args) -> int:
    subset = args.feature_subset.split(",") if args.feature_subset else None
    report = experiments.run_bike(
        args.data, feature_subset=subset, k_list=args.bins,
        reference_k=args.reference_k, epochs=args.epochs,
        learning_rate=args.learning_rate, seed=args.seed, out_dir=args.out)
    print(experiments.format_bike_report(report), end="")
    return 0


def _cmd_gen(args) -> int:
    spec = GeneratorSpec(args.name, args.seed, {"n": args.n, "d": args.d})
    spec.dataset().to_csv(args.out)
    print(f"wrote {args.out}")
    return 0


_HANDLERS = {
    "effect": _cmd_effect,
    "rebin": _cmd_rebin,
    "bench-case1": _cmd_bench_case1,
    "bench-case2": _cmd_bench_case2,
    "bike": _cmd_bike,
    "gen": _cmd_gen,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (ParseError, CacheError, ModelFileError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (NumericError, DivergenceError, MetricUndefinedError, EmptyBinError,
            AllocationError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, IndexError, InputShapeError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
