"""Command-line harness.

    ctxlearn roles --data table.csv [--tolerance 1e-9] [--format table|records]
    ctxlearn vowel --data vowel-context.data [--strategies all-combos] [--classifier nn|mlr]
    ctxlearn synthetic [--seed 0] [--classifier nn,mlr] [--format table|csv|records]
"""

from __future__ import annotations

import argparse
import datetime
import json
import sys
import warnings

from ctxlearn.data import VOWEL_CITATION, ShiftScenario, load_csv, load_vowel
from ctxlearn.experiments import run_synthetic, run_vowel
from ctxlearn.featrole import DEFAULT_TOLERANCE, classify_roles
from ctxlearn.report import FORMATS, emit_report


def _add_format(p):
    p.add_argument("--format", choices=FORMATS, default="table", help="output format (default: table)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ctxlearn", description="context-sensitive classification experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("roles", help="detect primary/contextual/irrelevant features in a discrete dataset")
    p.add_argument("--data", required=True, help="dataset in the canonical CSV dump format")
    p.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE)
    _add_format(p)

    p = sub.add_parser("vowel", help="contextual strategies on the vowel data")
    p.add_argument("--data", help="vowel-context.data file")
    p.add_argument(
        "--strategies",
        default="all-combos",
        help="comma-separated subset of norm,expand,weight,select, or all-combos (default)",
    )
    p.add_argument("--classifier", choices=("nn", "mlr"), default="nn")
    p.add_argument("--estimator", choices=("group",), default="group")
    p.add_argument("--k", type=int, default=1, help="neighbours for the nn classifier (default 1)")
    p.add_argument("--timestamp", action="store_true", help="record the wall-clock time in report metadata")
    _add_format(p)

    p = sub.add_parser("synthetic", help="normalization comparison on cold/warm synthetic data")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--classifier", default="nn,mlr", help="nn, mlr or nn,mlr (default)")
    p.add_argument("--k", type=int, default=1, help="neighbours for the nn classifier (default 1)")
    p.add_argument("--estimator-k", type=int, default=5, help="baseline neighbours for contextual-knn")
    p.add_argument("--n-rows", type=int, default=ShiftScenario.n_rows)
    p.add_argument("--noise-scale", type=float, default=ShiftScenario.noise_scale)
    p.add_argument("--coupling-scale", type=float, default=ShiftScenario.coupling_scale)
    p.add_argument("--timestamp", action="store_true", help="record the wall-clock time in report metadata")
    _add_format(p)
    return parser


def _stamp(report, enabled: bool):
    if enabled:
        report.metadata["timestamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
    return report


def cmd_roles(args) -> str:
    ds = load_csv(args.data)
    report = classify_roles(ds, args.tolerance)
    if args.format == "table":
        return report.render() + "\n"
    return "".join(json.dumps(r, sort_keys=True) + "\n" for r in report.to_records())


def cmd_vowel(args) -> str:
    if not args.data:
        raise SystemExit(f"--data is required. Expected file: {VOWEL_CITATION}")
    with warnings.catch_warnings():
        warnings.simplefilter("always")
        ds = load_vowel(args.data)
    report = run_vowel(ds, args.strategies, args.classifier, args.k, args.estimator)
    return emit_report(_stamp(report, args.timestamp), args.format)


def cmd_synthetic(args) -> str:
    classifiers = tuple(c.strip() for c in args.classifier.split(",") if c.strip())
    bad = [c for c in classifiers if c not in ("nn", "mlr")]
    if bad or not classifiers:
        raise ValueError(f"unknown classifier(s): {', '.join(bad) or '(none)'}")
    scenario = ShiftScenario(
        seed=args.seed, n_rows=args.n_rows, noise_scale=args.noise_scale, coupling_scale=args.coupling_scale
    )
    report = run_synthetic(scenario, classifiers, args.k, args.estimator_k)
    return emit_report(_stamp(report, args.timestamp), args.format)


COMMANDS = {"roles": cmd_roles, "vowel": cmd_vowel, "synthetic": cmd_synthetic}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        out = COMMANDS[args.command](args)
    except (ValueError, KeyError, OSError) as exc:
        print(f"ctxlearn {args.command}: error: {exc}", file=sys.stderr)
        return 1
    sys.stdout.write(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
