"""Run the eight normalization/expansion/weighting combinations on the vowel
data and print the table next to the reference percent column.

    python scripts/run_vowel_grid.py [--data data/vowel-context.data] [--classifier nn] [--k 1]
"""

import argparse
from pathlib import Path

from ctxlearn.data import load_vowel
from ctxlearn.experiments import run_vowel
from ctxlearn.report import emit_report

REFERENCE = [56, 58, 55, 59, 58, 64, 59, 66]
DEFAULT_DATA = Path(__file__).resolve().parents[1] / "data" / "vowel-context.data"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--data", default=str(DEFAULT_DATA))
    ap.add_argument("--classifier", choices=("nn", "mlr"), default="nn")
    ap.add_argument("--k", type=int, default=1)
    args = ap.parse_args()

    report = run_vowel(load_vowel(args.data), "all-combos", args.classifier, args.k)
    print(emit_report(report, "table"))
    print(f"{'configuration':<14} {'ours':>6} {'reference':>9} {'diff':>6}")
    for row, ref in zip(report.rows, REFERENCE):
        pct = 100 * row.accuracy
        print(f"{row.configuration:<14} {pct:6.1f} {ref:9d} {pct - ref:+6.1f}")


if __name__ == "__main__":
    main()
