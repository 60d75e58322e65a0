#!/usr/bin/env python3
"""Audit the cutoff family against the exhaustive desk-scale oracle.

For every (delta, b) combination and each revenue target on the grid, the
oracle enumerates all 2^16 Boolean rules at n = 4, keeps the marginally
monotone ones meeting the target, and reports the minimum noise sensitivity
next to the best feasible vote-count cutoff. The gap column measures how far
the cutoff family is from optimal at this small n (the optimality statement
is a large-n limit; mid-grid gaps up to ~0.125 are real at n = 4).

Example:
  python scripts/oracle_gap_table.py --deltas 0.1,0.25 --biases 0,0.5
"""

import argparse

import numpy as np

from noisemech.mechanism import MechanismParams
from noisemech.optimize import ns_min_bruteforce


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=4)
    ap.add_argument("--deltas", default="0.1,0.25")
    ap.add_argument("--biases", default="0,0.5")
    ap.add_argument("--r-grid", default="0.05:0.35:0.05")
    ap.add_argument("--setting", default="noisy-report",
                    choices=["noisy-report", "imperfect-knowledge"])
    args = ap.parse_args()

    start, stop, step = (float(x) for x in args.r_grid.split(":"))
    r_values = list(np.arange(start, stop + 1e-12, step))

    print("delta,b,r,feasible_count,min_ns,best_ltf_ns,best_ltf_threshold,ltf_gap")
    worst = 0.0
    for delta in (float(x) for x in args.deltas.split(",")):
        for b in (float(x) for x in args.biases.split(",")):
            params = MechanismParams(args.n, delta, b=b, setting=args.setting)
            for r in r_values:
                res = ns_min_bruteforce(params, r, "all-boolean")
                if res.feasible_count == 0:
                    print(f"{delta:.12g},{b:.12g},{r:.12g},0,nan,nan,,nan")
                    continue
                worst = max(worst, res.ltf_gap)
                print(
                    f"{delta:.12g},{b:.12g},{r:.12g},{res.feasible_count},"
                    f"{res.min_ns:.12g},{res.best_ltf_ns:.12g},"
                    f"{res.best_ltf_threshold},{res.ltf_gap:.12g}"
                )
    print(f"# worst gap: {worst:.12g}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
