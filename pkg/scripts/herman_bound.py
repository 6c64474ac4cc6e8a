"""Phase-averaged Lyapunov exponent of A cos(theta) against the lower bound ln(A/2).

Prints min_E bar-gamma(E, p/q) for golden-mean convergents next to the bound.
"""

import argparse
import math

import numpy as np

from quasispec import AnalyticPotential, IrrationalTarget, bar_gamma_rational


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--amplitude", type=float, default=8.0, help="A in A cos(theta)")
    ap.add_argument("--q", type=int, nargs="+", default=[5, 8, 13, 21, 34, 55])
    ap.add_argument("--energies", type=int, default=50)
    args = ap.parse_args()

    f = AnalyticPotential.cosine(args.amplitude)
    bound = max(0.0, math.log(args.amplitude / 2))
    reach = 2 + args.amplitude
    E = np.linspace(-reach, reach, args.energies)
    gold = IrrationalTarget.from_value("golden", 40)
    print(f"bound ln_+(A/2) = {bound:.6f}")
    print(f"{'p/q':>9}  {'min bar-gamma':>14}  {'argmin E':>9}  {'margin':>10}")
    for q in args.q:
        pq = gold.best_convergent(q)
        g = bar_gamma_rational(E, f, pq)
        i = int(np.argmin(g))
        print(f"{str(pq):>9}  {g[i]:14.6f}  {E[i]:9.3f}  {g[i] - bound:10.2e}")


if __name__ == "__main__":
    main()
