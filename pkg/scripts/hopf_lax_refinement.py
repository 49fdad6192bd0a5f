"""Hopf-Lax residual under grid refinement for x^2 and a piecewise-linear convex f."""
import argparse

import numpy as np

from cvxlsi import costs, infconv as ic


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--steps", type=float, nargs="+", default=[8e-3, 4e-3, 2e-3, 1e-3])
    args = ap.parse_args()
    H = costs.quadratic(1.0)
    funcs = {
        "x^2": ic.GridFunction.from_callable(lambda x: x * x, np.linspace(-3, 3, 61),
                                             deriv=lambda x: 2 * x, lipschitz=6.0),
        "pl convex": ic.GridFunction.piecewise_linear([-0.5, 0.2, 0.9], [-1.5, -0.2, 0.6, 2.0], span=5.0),
    }
    x = np.linspace(-1, 1, 41)
    print(f"{'d':>8s} " + " ".join(f"{k:>12s}" for k in funcs))
    for d in args.steps:
        res = [ic.hopf_lax_residual(f, H, [0.5, 1.0], x, dt=d, dx=d, exclude=0.05)["max_abs_residual"]
               for f in funcs.values()]
        print(f"{d:8.0e} " + " ".join(f"{r:12.3e}" for r in res))


if __name__ == "__main__":
    main()
