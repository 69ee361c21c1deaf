"""Finite-N moments of the correlated pair against their limits.

Prints sqrt(N)|E F1 F2 - C12| and |Var Y_N - C0| on a size grid, fits the
power law of the Var Y gap and extrapolates the size where it drops below a
threshold.
"""

import argparse
import math

import numpy as np

from chaosexp.cli.config import parse_n_grid
from chaosexp.cumulant import cross_cumulants_2d
from chaosexp.seqcalc import limit_constants


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--h1", type=float, default=0.55)
    p.add_argument("--h2", type=float, default=0.6)
    p.add_argument("--n-grid", default="256..16384")
    p.add_argument("--threshold", type=float, default=1e-2)
    args = p.parse_args()

    lim = limit_constants(args.h1, args.h2)
    ns, gaps = [], []
    print(f"{'N':>7} {'sqrtN|EF1F2-C12|':>18} {'|VarY-C0|':>12}")
    for n in parse_n_grid(args.n_grid):
        mom = cross_cumulants_2d(args.h1, args.h2, n, d=lim.d)
        gap = abs(mom.var_y - lim.c0)
        ns.append(n)
        gaps.append(gap)
        print(f"{n:>7} {math.sqrt(n) * abs(mom.ef1f2 - lim.c12):>18.8f} {gap:>12.6f}")
    slope, intercept = np.polyfit(np.log(ns[-3:]), np.log(gaps[-3:]), 1)
    hbar = 0.5 * (args.h1 + args.h2)
    print(f"Var Y gap slope (last three sizes) {slope:.3f}; reference 8*hbar-5 = {8 * hbar - 5:.3f}")
    if slope < 0:
        need = math.exp((math.log(args.threshold) - intercept) / slope)
        print(f"extrapolated size for gap < {args.threshold:g}: N ~ {need:.3g}")


if __name__ == "__main__":
    main()
