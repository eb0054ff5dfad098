"""Single-attempt acceptance probability of Fill on the walk {0..n} at t = ceil(c n^2).

    python3 scripts/acceptance_curve.py --n 8 16 32 --c-grid 0.125 0.25 0.5 1 2 --reps 5000
"""

import argparse
import csv
import sys

from perfect_sampling.fill import acceptance_curve
from perfect_sampling.rng import derive_rng


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[8, 16])
    ap.add_argument("--c-grid", type=float, nargs="+", default=[0.125, 0.25, 0.5, 1.0, 2.0])
    ap.add_argument("--reps", type=int, default=5000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", help="CSV path (default stdout)")
    args = ap.parse_args()

    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    writer = csv.writer(fh)
    writer.writerow(["n", "c", "t", "p", "se"])
    for n in args.n:
        for pt in acceptance_curve(n, args.c_grid, args.reps, derive_rng("curve", args.seed, n)):
            writer.writerow([n, pt.c, pt.horizon, f"{pt.p:.5f}", f"{pt.se:.5f}"])
    if args.out:
        fh.close()


if __name__ == "__main__":
    main()
