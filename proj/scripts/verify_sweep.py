#!/usr/bin/env python3
"""Check a sweep.csv written by `textgraph sweep-lambda` and print the best lambda."""
import argparse
import csv
import math
import sys


def parse(path):
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != ["lambda", "dev_acc", "test_acc"]:
            raise ValueError(f"unexpected header {header}")
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != 3:
                raise ValueError(f"line {lineno}: expected 3 fields, got {len(rec)}")
            lam, dev, test = (float(x) for x in rec)
            if not 0.0 <= lam <= 1.0:
                raise ValueError(f"line {lineno}: lambda {lam} outside [0, 1]")
            for name, v in (("dev_acc", dev), ("test_acc", test)):
                if not math.isnan(v) and not 0.0 <= v <= 1.0:
                    raise ValueError(f"line {lineno}: {name} {v} outside [0, 1]")
            rows.append((lam, dev, test))
    if not rows:
        raise ValueError("no data rows")
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("csv")
    ap.add_argument("--rows", type=int, help="expected number of rows")
    args = ap.parse_args()
    try:
        rows = parse(args.csv)
    except (OSError, ValueError) as e:
        print(f"{args.csv}: {e}", file=sys.stderr)
        return 1
    if args.rows is not None and len(rows) != args.rows:
        print(f"{args.csv}: {len(rows)} rows, expected {args.rows}", file=sys.stderr)
        return 1
    # Select on dev accuracy when there is a dev split, else on test.
    key = 1 if not any(math.isnan(r[1]) for r in rows) else 2
    best = max(rows, key=lambda r: r[key])
    print(f"rows={len(rows)} best_lambda={best[0]:g} dev_acc={best[1]:.4f} test_acc={best[2]:.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
