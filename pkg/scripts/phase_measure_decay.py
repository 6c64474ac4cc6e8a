"""Decay of |{theta : E in sigma(p/q, theta)}| along golden-mean convergents.

The log-measure should fall at least like -(bar-gamma - eps) q / 2d.
"""

import argparse

import numpy as np

from quasispec import AnalyticPotential, IrrationalTarget, bar_gamma_rational, upsilon_measure


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--amplitude", type=float, default=8.0)
    ap.add_argument("--energy", type=float, default=0.0)
    ap.add_argument("--q", type=int, nargs="+", default=[5, 8, 13, 21])
    args = ap.parse_args()

    f = AnalyticPotential.cosine(args.amplitude)
    gold = IrrationalTarget.from_value("golden", 40)
    convs = [gold.best_convergent(q) for q in args.q]
    gamma = float(bar_gamma_rational(args.energy, f, convs[-1]))
    qs, logs = [], []
    print(f"E = {args.energy}, bar-gamma = {gamma:.5f}")
    for pq in convs:
        m = upsilon_measure(args.energy, f, pq)
        print(f"{str(pq):>8}  measure {m:.4e}")
        if m > 0:  # an exact tangency gives measure 0 and no log
            qs.append(pq.q)
            logs.append(np.log(m))
    if len(qs) >= 2:
        slope = np.polyfit(qs, logs, 1)[0]
        print(f"fitted slope {slope:.4f}, gamma/2 = {gamma / 2:.4f}")


if __name__ == "__main__":
    main()
