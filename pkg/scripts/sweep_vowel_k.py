"""How the vowel strategy grid moves with the number of neighbours.

Diagnostic only: k is chosen on the test speakers here, so none of these
numbers should be reported as a tuned result.
"""

import argparse
from pathlib import Path

from ctxlearn.data import load_vowel
from ctxlearn.experiments import run_vowel

REFERENCE = [56, 58, 55, 59, 58, 64, 59, 66]
DEFAULT_DATA = Path(__file__).resolve().parents[1] / "data" / "vowel-context.data"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--data", default=str(DEFAULT_DATA))
    ap.add_argument("--ks", default="1,2,3,4,5,7")
    args = ap.parse_args()
    ds = load_vowel(args.data)
    for k in (int(v) for v in args.ks.split(",")):
        pcts = [100 * r.accuracy for r in run_vowel(ds, "all-combos", "nn", k).rows]
        worst = max(abs(p - ref) for p, ref in zip(pcts, REFERENCE))
        print(f"k={k}: " + " ".join(f"{p:5.1f}" for p in pcts) + f"   max |diff| {worst:.1f}")


if __name__ == "__main__":
    main()
