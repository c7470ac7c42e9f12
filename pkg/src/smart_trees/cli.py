"""Command line entry point: ``smart {train,predict,datagen,bench}``."""

from __future__ import annotations

import argparse
import sys
from typing import List, Optional, Sequence

import numpy as np

from .bench import SUITES, check_suite, report, run_many, split_report, suite_specs
from .csvio import CSVError, read_dataset, read_table, select_columns, write_table
from .datagen import GENERATORS, generate
from .forward import ForwardConfig
from .model import DEFAULT_SEED, SmartModel, fit
from .tree import TreeConfig


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model")
    g.add_argument("--max-terms", type=int, default=ForwardConfig.max_terms,
                   help="coefficient budget of the forward pass, intercept included (default %(default)s)")
    g.add_argument("--max-degree", type=int, default=ForwardConfig.max_degree,
                   help="maximum interaction degree (default %(default)s)")
    g.add_argument("--min-rss-decrease", type=float, default=ForwardConfig.min_rss_decrease,
                   help="forward pass stops below this relative RSS decrease (default %(default)s)")
    g.add_argument("--gcv-penalty", type=float, default=None,
                   help="GCV cost per knot (default 3 if max degree > 1, else 2)")
    g.add_argument("--cv-threshold", type=float, default=TreeConfig.cv_improvement_threshold,
                   help="relative cross-validated RSS improvement needed to split (default %(default)s)")
    g.add_argument("--cv-folds", type=int, default=TreeConfig.cv_folds,
                   help="folds of the split confirmation (default %(default)s)")
    g.add_argument("--fit-fraction", type=float, default=TreeConfig.fit_fraction,
                   help="share of node rows used to fit during the split search (default %(default)s)")
    g.add_argument("--no-prune", action="store_true", help="skip per-leaf pruning")


def _add_seed(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=DEFAULT_SEED,
                   help="seed for every random choice (default %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smart",
        description="Spline regression with tree-partitioned leaf models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit a model on a CSV file")
    p.add_argument("input", help="training CSV (header row, numeric cells)")
    p.add_argument("--target", required=True, help="response column name")
    p.add_argument("--output", "-o", required=True, help="model JSON to write")
    p.add_argument("--categorical", default="",
                   help="comma separated feature columns holding numeric level codes")
    p.add_argument("--ignore", default="", help="comma separated columns that are not features")
    _add_seed(p)
    _add_model_flags(p)

    p = sub.add_parser("predict", help="append predictions to a CSV file")
    p.add_argument("model", help="model JSON written by train")
    p.add_argument("input", help="CSV with the training feature columns")
    p.add_argument("--output", "-o", default="-", help="output CSV (default stdout)")
    p.add_argument("--column", default="prediction", help="name of the appended column (default %(default)s)")

    p = sub.add_parser("datagen", help="write a simulated dataset as CSV")
    p.add_argument("dataset", choices=sorted(GENERATORS))
    p.add_argument("--n", type=int, default=None, help="number of rows (generator default if omitted)")
    p.add_argument("--d", type=int, default=None, help="number of inputs (friedman1 only)")
    p.add_argument("--sigma", type=float, default=None, help="noise standard deviation")
    p.add_argument("--truth", action="store_true", help="also write the noiseless response as 'truth'")
    p.add_argument("--output", "-o", default="-", help="output CSV (default stdout)")
    _add_seed(p)

    p = sub.add_parser("bench", help="run a benchmark suite")
    p.add_argument("--suite", required=True, choices=SUITES)
    p.add_argument("--reps", type=int, default=1, help="replications per cell (default %(default)s)")
    p.add_argument("--format", choices=("csv", "markdown"), default="markdown")
    p.add_argument("--quick", action="store_true", help="smallest cells only")
    p.add_argument("--splits", action="store_true", help="also print the true/found split table (synthetic suite)")
    p.add_argument("--check", action="store_true",
                   help="evaluate the suite's acceptance checks; exit status 1 if any fails")
    p.add_argument("--output", "-o", default="-", help="report file (default stdout)")
    _add_seed(p)
    return parser


def _open_out(path):
    return sys.stdout if path == "-" else open(path, "w", newline="", encoding="utf-8")


def _close_out(fh):
    if fh is not sys.stdout:
        fh.close()


def _configs(args):
    fc = ForwardConfig(max_terms=args.max_terms, max_degree=args.max_degree,
                       min_rss_decrease=args.min_rss_decrease, gcv_penalty=args.gcv_penalty)
    tc = TreeConfig(cv_improvement_threshold=args.cv_threshold, cv_folds=args.cv_folds,
                    fit_fraction=args.fit_fraction, rng_seed=args.seed)
    return fc, tc


def _names(text: str) -> List[str]:
    return [c.strip() for c in text.split(",") if c.strip()]


def cmd_train(args) -> int:
    data = read_dataset(args.input, args.target, _names(args.categorical), _names(args.ignore))
    if data.n == 0:
        raise CSVError(f"{args.input}: no data rows")
    if np.ptp(data.y) == 0.0:
        print(f"warning: target {args.target!r} is constant; the model is a single intercept", file=sys.stderr)
    fc, tc = _configs(args)
    model = fit(data, fc, tc, prune=not args.no_prune, seed=args.seed, target=args.target)
    model.save(args.output)
    resid = data.y - model.predict(data.X)
    print(model.summary())
    print(f"training RSS: {float(resid @ resid):.6g}  rows: {data.n}")
    return 0


def cmd_predict(args) -> int:
    model = SmartModel.load(args.model)
    header, M = read_table(args.input)
    X = select_columns(args.input, header, M, model.feature_names)
    pred = model.predict(X) if X.shape[0] else np.empty(0)
    fh = _open_out(args.output)
    try:
        write_table(fh, header, M, (args.column, pred))
    finally:
        _close_out(fh)
    return 0


def cmd_datagen(args) -> int:
    params = {"seed": args.seed}
    for key in ("n", "d", "sigma"):
        v = getattr(args, key)
        if v is not None:
            params[key] = v
    try:
        data = generate(args.dataset, **params)
    except TypeError:
        raise ValueError(f"dataset {args.dataset} does not accept {sorted(set(params) - {'seed'})}") from None
    header = list(data.names) + ["y"]
    M = np.column_stack([data.X, data.y])
    if args.truth:
        header.append("truth")
        M = np.column_stack([M, data.truth])
    fh = _open_out(args.output)
    try:
        write_table(fh, header, M)
    finally:
        _close_out(fh)
    return 0


def cmd_bench(args) -> int:
    results = run_many(suite_specs(args.suite, reps=args.reps, seed=args.seed, quick=args.quick))
    fh = _open_out(args.output)
    try:
        fh.write(report(results, args.format))
        if args.splits and args.suite == "synthetic":
            fh.write("\n")
            fh.write(split_report(results, args.format))
    finally:
        _close_out(fh)
    if not args.check:
        return 0
    checks = check_suite(args.suite, results)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.detail}", file=sys.stderr)
    return 0 if checks and all(c.passed for c in checks) else 1


COMMANDS = {"train": cmd_train, "predict": cmd_predict, "datagen": cmd_datagen, "bench": cmd_bench}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (CSVError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
