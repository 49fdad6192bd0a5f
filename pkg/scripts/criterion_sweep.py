"""Modulus criterion across the built-in families.

Prints b_best, the verdict and the ratio at the largest h for each measure,
plus the tail-decay check at the fitted b.
"""
import argparse

from cvxlsi import costs, measures, transport_map as tm

MEASURES = {
    "two-point": lambda n: measures.two_point(),
    "uniform[0,1]": lambda n: measures.family("uniform", 0.0, 1.0),
    "gaussian": lambda n: measures.family("gaussian", 0.0, 1.0),
    "gaussian (atoms)": lambda n: measures.discretize(measures.family("gaussian", 0.0, 1.0), n),
    "exponential tau": lambda n: tm.tau(),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=10 ** 4, help="atoms for discretized measures")
    args = ap.parse_args()
    theta = costs.quadratic(1.0).theta
    print(f"{'measure':18s} {'verdict':13s} {'b_best':>10s} {'ratio@hmax':>11s}  tail-decay")
    for name, make in MEASURES.items():
        mu = make(args.n)
        rep = tm.criterion_check(mu, theta)
        b = rep["b_best"]
        tail = tm.tail_decay_check(mu, theta, b).verdict if rep.passed else "-"
        print(f"{name:18s} {rep.verdict:13s} {b:10.4g} {rep['ratio_at_hmax']:11.4g}  {tail}")


if __name__ == "__main__":
    main()
