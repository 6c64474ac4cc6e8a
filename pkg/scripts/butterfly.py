"""Bands of A cos at every p/q with q <= q_max, as CSV rows p,q,alpha,lower,upper.

Plot lower..upper against alpha to draw the Hofstadter butterfly.
"""

import argparse
import csv
import math
import sys
from fractions import Fraction

from quasispec import AnalyticPotential, Rational, sigma


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--amplitude", type=float, default=2.0)
    ap.add_argument("--q-max", type=int, default=20)
    ap.add_argument("--theta", type=float, default=0.0)
    args = ap.parse_args()

    f = AnalyticPotential.cosine(args.amplitude)
    fracs = sorted({Fraction(p, q) for q in range(1, args.q_max + 1) for p in range(q + 1)
                    if math.gcd(p, q) == 1})
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["p", "q", "alpha", "lower", "upper"])
    for fr in fracs:
        for lo, hi in sigma(f, Rational(fr.numerator, fr.denominator), args.theta):
            w.writerow([fr.numerator, fr.denominator, f"{float(fr):.10g}", f"{lo:.12g}", f"{hi:.12g}"])


if __name__ == "__main__":
    main()
