"""Degree-reduction statistics over random instances, one CSV row per instance."""
import argparse
import csv
import sys
from fractions import Fraction

from lassgap import gadgets, xor3


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--beta", type=int, default=4)
    ap.add_argument("--M", type=int, default=4)
    ap.add_argument("--count", type=int, default=100)
    a = ap.parse_args()

    m = a.beta * a.n
    w = csv.writer(sys.stdout)
    w.writerow(["seed", "Y", "removed", "bound", "max_rep_degree", "cap", "reference_Y"])
    for seed in range(a.count):
        inst = xor3.sample_random(a.n, m, seed)
        H = gadgets.build_bs_instance(inst, gadgets.GadgetParams(a.beta, a.M, seed=seed, certify=False))
        red = gadgets.reduce_degree(H)
        reps = [red.graph.rep_index(j, b) for j in range(a.n) for b in (0, 1)]
        w.writerow([seed, red.Y, len(red.removed), float(Fraction(red.bound)),
                    int(gadgets.eb_degrees(red.graph)[reps].max()), a.beta * a.M + 1, 1000 * m * m // a.n])


if __name__ == "__main__":
    main()
