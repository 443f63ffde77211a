"""Crossing time of the two-interval configuration as the marker count grows."""

import argparse
import math

from align1d import Kernel, discretize, two_block_scenario, prepare
from align1d.dynamics import integrate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--epsilon", type=float, default=0.1)
    ap.add_argument("--delta", type=float, default=0.05)
    ap.add_argument("--counts", default="10,20,40,80,160,320")
    args = ap.parse_args()

    k = Kernel.constant(1.0)
    prev = None
    print(f"{'n':>6} {'t*':>14} {'change':>12}")
    for n in map(int, args.counts.split(",")):
        sc = two_block_scenario(args.epsilon, args.delta, k, 1.0, n_per_interval=n)
        m = prepare(sc, discretize(sc))
        t = integrate(m, k, 1.0, T=5.0, method="rk45").terminal["time"]
        change = "" if prev is None else f"{abs(t - prev):.3e}"
        print(f"{n:>6} {t:>14.10f} {change:>12}")
        prev = t
    # continuum limit (constant protocol, kappa = 1): the inner edges are
    # 2(delta - eps) + 2 eps e^-t apart, which vanishes at ln(eps / (eps - delta))
    if args.delta < args.epsilon:
        print(f"limit {math.log(args.epsilon / (args.epsilon - args.delta)):.10f}")


if __name__ == "__main__":
    main()
