#!/usr/bin/env python3
"""Tabulate the reduced-model chi-square across its three regimes.

Closed forms (noiseless wide and tall cases) across the design dimension,
plus the Monte Carlo determinant integral for the square noisy case across
sigma.  All values drift toward 1 in their respective hardness limits.
"""

import argparse
import sys

from shufflab import make_rng
from shufflab.chisq import chisq_case1_closed, chisq_case2_closed, chisq_m_eq_d_mc


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--d", type=int, nargs="+", default=[30, 50, 100, 300, 1000])
    parser.add_argument("--sigma", type=float, nargs="+", default=[1.0, 2.0, 4.0, 8.0, 16.0])
    parser.add_argument("--mc-d", type=int, default=40, dest="mc_d")
    parser.add_argument("--samples", type=int, default=50_000)
    parser.add_argument("--seed", type=int, default=1)
    args = parser.parse_args()

    print("noiseless closed forms (value -> 1 as d grows):")
    print(f"{'d':>6} {'case1 (m=2,k=1)':>16} {'case1 (m=2,k=2)':>16} {'case2 (m=1,k=2)':>16}")
    for d in args.d:
        c11 = chisq_case1_closed(d, 2, 1).value
        c12 = chisq_case1_closed(d, 2, 2).value
        c22 = chisq_case2_closed(d, 1, 2).value
        print(f"{d:6d} {c11:16.6f} {c12:16.6f} {c22:16.6f}")

    print(f"\nsquare case Monte Carlo at d = {args.mc_d}, k = 2 (value -> 1 as sigma grows):")
    print(f"{'sigma':>8} {'value':>10} {'stderr':>10} {'warning':>30}")
    for sigma in args.sigma:
        rep = chisq_m_eq_d_mc(args.mc_d, 2, sigma, args.samples, make_rng(args.seed))
        print(f"{sigma:8.2f} {rep.value:10.5f} {rep.stderr:10.5f} {rep.warning[:30]:>30}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
