"""Measure of A_est symmetric-difference S_-(p/q) along golden-mean convergents.

A_est is the set where bar-gamma < gamma_tol; S_-(p/q) is the intersection of
sigma(p/q, theta) over the phase grid.
"""

import argparse

import numpy as np

from quasispec import AnalyticPotential, IrrationalTarget, conjecture_probe


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--amplitude", type=float, default=2.0)
    ap.add_argument("--q", type=int, nargs="+", default=[5, 8, 13, 21])
    ap.add_argument("--energies", type=int, default=241)
    ap.add_argument("--gamma-tol", type=float, default=0.05)
    args = ap.parse_args()

    f = AnalyticPotential.cosine(args.amplitude)
    gold = IrrationalTarget.from_value("golden", 40)
    reach = 2 + args.amplitude
    E = np.linspace(-reach, reach, args.energies)
    convs = [gold.best_convergent(q) for q in args.q]
    rep = conjecture_probe(f, gold, convs, E, [0.1, 0.25], gamma_tol=args.gamma_tol)
    print(f"|A_est| = {rep.a_measure:.4f}, S_- inside A_est: {rep.s_minus_inside_a_set}")
    print(f"{'p/q':>8}  {'|S_-|':>8}  {'|A_est dS_-|':>12}")
    for r in rep.rows:
        print(f"{r.p:>4}/{r.q:<3}  {r.s_minus_measure:8.4f}  {r.sym_diff:12.4f}")


if __name__ == "__main__":
    main()
