"""Weak transport on the symmetric exponential measure.

Scans the scale a of the cost theta(a x) = (a x)^2 on an n-atom discretization
of tau and reports the worst cost/entropy ratio over exponential tilts, in
both directions.
"""
import argparse

import numpy as np

from cvxlsi import costs, measures, transport_map as tm, weak_ot as wot


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=32)
    ap.add_argument("--tilts", type=int, default=200)
    ap.add_argument("--a", type=float, nargs="+", default=[0.3, 0.45, 0.5, 0.52, 0.6, 1.0])
    ap.add_argument("--csv", help="write the scan to this file")
    args = ap.parse_args()
    theta = costs.quadratic(1.0).theta
    mu = measures.discretize(tm.tau(), args.n)
    rows = []
    print(f"{'a':>6s} {'minus':>10s} {'plus':>10s}")
    for a in args.a:
        out = []
        for direction in ("minus", "plus"):
            rep = wot.weak_transport_verify(mu, direction, theta, a, n_tilts=args.tilts, seed=1)
            out.append(rep["worst_ratio"])
        rows.append((a, *out))
        print(f"{a:6.3f} {out[0]:10.4f} {out[1]:10.4f}")
    if args.csv:
        np.savetxt(args.csv, np.array(rows), delimiter=",", header="a,minus,plus", comments="")


if __name__ == "__main__":
    main()
