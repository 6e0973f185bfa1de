"""Per-program transformation counts for the default pipeline, as a table or CSV."""

import argparse
import csv
import sys
import time
from pathlib import Path

from cpsopt import ir
from cpsopt.cli import load
from cpsopt.interp import evaluate, outcomes_equal
from cpsopt.opt import PASSES, run_pipeline

ROOT = Path(__file__).resolve().parent.parent
COLUMNS = ["program", "size", "size-after", "branches-eliminated", "copies-propagated",
           "functions-inlined", "params-removed", "same-result", "ms"]


def row(path, passes):
    p = load(path)
    start = time.perf_counter()
    q, stats = run_pipeline(p, passes)
    ms = (time.perf_counter() - start) * 1000
    same = outcomes_equal(evaluate(p)[0], evaluate(q)[0])
    return {"program": path.name, "size": ir.size(p.body), "size-after": ir.size(q.body),
            **stats.to_dict(), "same-result": same, "ms": f"{ms:.1f}"}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--corpus", type=Path, default=ROOT / "corpus")
    ap.add_argument("--passes", default=",".join(PASSES))
    ap.add_argument("--csv", action="store_true")
    args = ap.parse_args()
    passes = [x for x in args.passes.split(",") if x]
    rows = [row(path, passes) for path in sorted(args.corpus.iterdir())
            if path.suffix in (".mml", ".cps")]
    if args.csv:
        w = csv.DictWriter(sys.stdout, COLUMNS)
        w.writeheader()
        w.writerows(rows)
        return
    widths = [max(len(c), *(len(str(r[c])) for r in rows)) for c in COLUMNS]
    print("  ".join(c.rjust(w) for c, w in zip(COLUMNS, widths)))
    for r in rows:
        print("  ".join(str(r[c]).rjust(w) for c, w in zip(COLUMNS, widths)))


if __name__ == "__main__":
    main()
