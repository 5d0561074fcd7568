"""Command-line entry points: predict, simulate, path.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
Every failure message is prefixed with the stage that raised it.
"""

from __future__ import annotations

import argparse
import os
import sys
from contextlib import contextmanager

from . import __version__
from .errors import DataError, NumericalError, SparseCPError
from .io import (
    experiment_document,
    parse_dataset_csv,
    parse_labeled_csv,
    report_document,
    write_json_atomic,
)
from .path import lars_lasso_path
from .predictors import VariantSpec, predict
from .simulate import example_spec, validity_experiment

JOBS_ENV = "SPARSECP_JOBS"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


@contextmanager
def _stage(name):
    try:
        yield
    except SparseCPError as exc:
        raise type(exc)(f"{name}: {exc}") from exc


def _variant_from_args(args) -> VariantSpec:
    return VariantSpec(
        kind=args.variant,
        penalty_weight=args.mu,
        ridge_weight=getattr(args, "ridge_weight", None),
        half_offset=getattr(args, "half_offset", False),
    )


def _add_variant_flags(sub):
    sub.add_argument("--variant", default="colp",
                     choices=["colp", "corp", "corlap", "cenep", "cosmolap"])
    sub.add_argument("--rule", default="smallest",
                     choices=["smallest", "early-stop", "stopped", "npn"])
    sub.add_argument("--mu", type=float, default=1.0,
                     help="quadratic penalty weight for cenep/cosmolap")
    sub.add_argument("--neighbors", type=int, default=2,
                     help="window size for the npn rule")
    sub.add_argument("--early-stop-factor", type=float, default=10.0)
    sub.add_argument("--standardize", action="store_true",
                     help="rescale columns to unit norm before fitting")
    sub.add_argument("--half-offset", action="store_true",
                     help="use lam/2 instead of lam in the cenep/cosmolap offset")
    sub.add_argument("--ridge-weight", type=float, default=None,
                     help="fixed ridge parameter for corp/corlap (default: per-step lambda)")


def build_parser() -> _Parser:
    parser = _Parser(prog="sparsecp", description=__doc__)
    parser.add_argument("--version", action="version", version=f"sparsecp {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    pr = subs.add_parser("predict", help="conformal prediction set for one query row")
    pr.add_argument("--data", required=True, help="CSV with header row")
    pr.add_argument("--epsilon", type=float, required=True)
    _add_variant_flags(pr)
    pr.add_argument("--response", default=None,
                    help="response column name or 0-based index (default: last column)")
    pr.add_argument("--query-policy", default="last-row-unlabeled",
                    choices=["last-row-unlabeled", "held-out-index", "random-with-seed"])
    pr.add_argument("--query-index", type=int, default=None,
                    help="0-based data row for the held-out-index policy")
    pr.add_argument("--seed", type=int, default=None)
    pr.add_argument("--out", required=True)
    pr.set_defaults(func=_cmd_predict)

    sim = subs.add_parser("simulate", help="replicated validity experiment")
    sim.add_argument("--example", required=True, choices=["a", "b", "c", "d"])
    sim.add_argument("--n", type=int, required=True)
    sim.add_argument("--sigma", type=float, required=True)
    sim.add_argument("--reps", type=int, required=True)
    sim.add_argument("--epsilon", type=float, required=True)
    _add_variant_flags(sim)
    sim.add_argument("--seed", type=int, required=True)
    sim.add_argument("--trace-csv", default=None,
                     help="also write per-step lengths of every replication")
    sim.add_argument("--out", required=True)
    sim.set_defaults(func=_cmd_simulate)

    pa = subs.add_parser("path", help="l1 regularization path of a labeled CSV")
    pa.add_argument("--data", required=True)
    pa.add_argument("--response", default=None)
    pa.add_argument("--out", required=True)
    pa.set_defaults(func=_cmd_path)
    return parser


def _cmd_predict(args) -> int:
    if args.epsilon <= 0 or args.epsilon >= 1:
        raise _UsageError("--epsilon must lie strictly between 0 and 1")
    if args.query_policy == "held-out-index" and args.query_index is None:
        raise _UsageError("--query-policy held-out-index requires --query-index")
    with _stage("parse"):
        parsed = parse_dataset_csv(
            args.data,
            query_row_policy=args.query_policy,
            response=args.response,
            holdout_index=args.query_index,
            seed=args.seed,
        )
    with _stage("predict"):
        report = predict(
            parsed.data,
            parsed.x_new,
            args.epsilon,
            _variant_from_args(args),
            rule=args.rule,
            n_neighbors=args.neighbors,
            early_stop_factor=args.early_stop_factor,
            y_true=parsed.y_query,
            standardize=args.standardize,
        )
    doc = report_document(report, seed=args.seed, software_version=__version__)
    doc["query_index"] = parsed.query_index
    doc["feature_names"] = list(parsed.feature_names)
    if parsed.y_query is not None:
        doc["y_query"] = parsed.y_query
        doc["covered"] = report.final_set.contains(parsed.y_query)
    with _stage("write"):
        write_json_atomic(args.out, doc)
    return 0


def _cmd_simulate(args) -> int:
    if args.epsilon <= 0 or args.epsilon >= 1:
        raise _UsageError("--epsilon must lie strictly between 0 and 1")
    if args.reps < 1:
        raise _UsageError("--reps must be positive")
    n_jobs = int(os.environ.get(JOBS_ENV, "1"))
    with _stage("configure"):
        spec = example_spec(args.example, args.n, args.sigma)
    trace = [] if args.trace_csv else None
    with _stage("simulate"):
        result = validity_experiment(
            spec,
            args.epsilon,
            _variant_from_args(args),
            args.rule,
            args.reps,
            args.seed,
            n_neighbors=args.neighbors,
            early_stop_factor=args.early_stop_factor,
            standardize=args.standardize,
            n_jobs=n_jobs,
            trace=trace,
        )
    config = {
        "example": args.example,
        "n": args.n,
        "sigma": args.sigma,
        "epsilon": args.epsilon,
        "variant": args.variant,
        "rule": args.rule,
        "mu": args.mu,
        "neighbors": args.neighbors,
        "early_stop_factor": args.early_stop_factor,
        "standardize": args.standardize,
        "requested_reps": args.reps,
    }
    with _stage("write"):
        write_json_atomic(args.out, experiment_document(result, config, __version__))
        if args.trace_csv:
            _write_trace_csv(args.trace_csv, trace)
    return 0


def _write_trace_csv(path, trace) -> None:
    import csv as _csv

    with open(path, "w", newline="") as fh:
        writer = _csv.writer(fh)
        writer.writerow(["rep", "step", "lambda", "length"])
        for rep, step, lam, length in trace:
            writer.writerow([rep, step, repr(float(lam)), repr(float(length))])


def _cmd_path(args) -> int:
    from .io import path_document

    with _stage("parse"):
        data, names = parse_labeled_csv(args.data, response=args.response)
    with _stage("path"):
        solution = lars_lasso_path(data)
    with _stage("write"):
        write_json_atomic(args.out, path_document(solution, names, __version__))
    return 0


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version paths
        code = exc.code
        return int(code) if isinstance(code, int) else 0
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


def main() -> None:
    sys.exit(run_cli())
