"""Run the full chain on a discretized standard Gaussian and print each verdict."""
import argparse
import time

from cvxlsi import selftest


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=10 ** 4)
    ap.add_argument("--n-weak", type=int, default=32)
    ap.add_argument("--tilts", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    t0 = time.perf_counter()
    reps = selftest.gaussian_chain(n=args.n, n_weak=args.n_weak, n_tilts=args.tilts, seed=args.seed)
    summary = reps[0]
    print(f"b = {summary['b']:.6g}  c = {summary['c']:.6g}  a = {summary['a']:.6g}")
    for r in reps[1:]:
        worst = r.values.get("worst_ratio", float("nan"))
        print(f"  {r.check:22s} {r.verdict:13s} worst ratio {worst:.4g}")
    print(f"{summary.verdict} in {time.perf_counter() - t0:.1f} s")


if __name__ == "__main__":
    main()
