"""Sub-Gaussian tail fits for convex 1-Lipschitz functions of Gaussian vectors."""
import argparse

from cvxlsi import concentration as cn, measures


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dims", type=int, nargs="+", default=[1, 4, 16, 64])
    ap.add_argument("--zoo", default="norm", choices=cn.ZOO)
    ap.add_argument("--M", type=int, default=10 ** 5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    base = measures.family("gaussian", 0.0, 1.0)
    print(f"{'N':>4s} {'A':>8s} {'B':>8s} {'resid':>8s}  envelope")
    for N in args.dims:
        cfg = cn.ExperimentConfig(base=base, N=N, M=args.M, zoo=args.zoo, seed=args.seed)
        rep, _, fit = cn.concentration_report(cfg)
        print(f"{N:4d} {fit.A:8.4f} {fit.B:8.4f} {fit.residual:8.4f}  {rep.verdict}")


if __name__ == "__main__":
    main()
