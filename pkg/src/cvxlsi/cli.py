"""Command-line front end.

Measures and costs are given either as a path to a spec file or inline as
directives, for example::

    cvxlsi check-criterion family gaussian 0 1 cost quadratic 1
    cvxlsi lsi-test family gaussian 0 1 discretize 1000 cost quadratic 1 --c 2
    cvxlsi chain b_to_c --b 1 --t0 1 --cost quadratic

Exit status: 0 pass, 1 fail or inconclusive, 2 usage or configuration
error, 3 numeric divergence.
"""
from __future__ import annotations

import argparse
import math
import shlex
import sys
from pathlib import Path

import numpy as np

from . import concentration, costs, inequalities, infconv, measures, selftest, transport_map, weak_ot
from .errors import DivergenceError
from .report import Report

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_DIVERGENCE = 0, 1, 2, 3
HEADS = ("family", "atom", "gridcdf", "cost", "discretize")


class UsageError(Exception):
    pass


def split_directives(tokens: list[str]) -> list[list[str]]:
    groups: list[list[str]] = []
    for tok in tokens:
        if tok in HEADS:
            groups.append([tok])
        elif groups:
            groups[-1].append(tok)
        else:
            raise UsageError(f"expected a directive ({', '.join(HEADS)}) or a spec file, got {tok!r}")
    return groups


def parse_spec(tokens: list[str]):
    """``(measure or None, cost or None)`` from a spec file or inline directives."""
    base = "."
    if len(tokens) == 1 and Path(tokens[0]).is_file():
        path = Path(tokens[0])
        base = path.parent
        lines = path.read_text().splitlines()
        groups = [ln.split("#", 1)[0].split() for ln in lines]
        groups = [g for g in groups if g]
    else:
        groups = split_directives(tokens)
    cost = None
    disc = None
    mlines = []
    for g in groups:
        if g[0] == "cost":
            cost = costs.parse_cost(g[1:])
        elif g[0] == "discretize":
            if len(g) != 2:
                raise UsageError("discretize takes the number of atoms")
            disc = int(g[1])
        else:
            mlines.append(" ".join(g))
    mu = measures.parse_measure(mlines, base_dir=base) if mlines else None
    if mu is not None and disc is not None:
        mu = measures.discretize(mu, disc)
    return mu, cost


def _need(mu, cost=None, want_cost=True):
    if mu is None:
        raise UsageError("a measure is required")
    if want_cost and cost is None:
        cost = costs.quadratic(1.0)
    return mu, cost


def _family(args):
    return inequalities.TestFunctionFamily(seed=args.seed, count=args.count, L=args.L)


def _tol(args):
    return measures.Tolerance(rel=args.tol) if args.tol is not None else inequalities.DEFAULT_TOL


# ---------------------------------------------------------------------------
# subcommands: each returns a list of reports


def cmd_check_criterion(args):
    mu, cost = _need(*parse_spec(args.spec))
    h = np.logspace(math.log10(args.h_min), math.log10(args.h_max), args.h_points)
    return [transport_map.criterion_check(mu, cost.theta, t0=args.t0, h_grid=h)]


def cmd_lsi_test(args):
    mu, cost = _need(*parse_spec(args.spec))
    if args.c is None:
        raise UsageError("--c is required")
    return [inequalities.lsi_test(mu, cost.H, args.c, _family(args), _tol(args))]


def cmd_dual_ic(args):
    mu, cost = _need(*parse_spec(args.spec))
    th = cost.theta if args.a is None else costs.transform(cost.theta, 1.0, args.a)
    return [inequalities.dual_ic_test(mu, th, args.t, args.mode, _family(args), _tol(args))]


def cmd_poincare(args):
    mu, _ = _need(*parse_spec(args.spec), want_cost=False)
    if args.a is None:
        raise UsageError("--a is required")
    return [inequalities.convex_poincare_test(mu, args.a, _family(args), _tol(args))]


def cmd_infconv(args):
    mu, cost = parse_spec(args.spec)
    cost = cost or costs.quadratic(1.0)
    fam = inequalities.TestFunctionFamily(seed=args.seed, count=args.count, L=args.L)
    funcs = inequalities.generate_tests(fam, mu)
    x = np.linspace(args.x_min, args.x_max, args.points)
    rows = []
    for f in funcs:
        q = infconv.q_values(f, cost.theta, args.t, x, engine=args.engine)
        rows.extend((f.label, xi, f(xi), qi) for xi, qi in zip(x, q))
    rep = Report("infconv", "Q_t f(x) = inf_y f(y) + t theta(|x - y|/t)", "pass",
                 values={"functions": len(funcs), "points": x.size},
                 params={"t": args.t, "cost": cost.theta.name, "engine": args.engine})
    rep.tables["values"] = (["function", "x", "f", "Q_t_f"], rows)
    return [rep]


def cmd_weak_ot(args):
    mu, cost = _need(*parse_spec(args.spec))
    verify = args.direction in ("minus", "plus")
    if args.nu is None and not verify:
        raise UsageError("--nu is required unless --direction is minus or plus")
    if not isinstance(mu, measures.Atoms):
        raise UsageError("weak-ot needs atomic measures (use atom directives or discretize N)")
    out = []
    if args.nu is not None:
        nu, _ = parse_spec(shlex.split(args.nu))
        if nu is None:
            raise UsageError("--nu does not describe a measure")
        if not isinstance(nu, measures.Atoms):
            raise UsageError("weak-ot needs atomic measures (use atom directives or discretize N)")
        th = cost.theta if args.a is None else costs.transform(cost.theta, 1.0, args.a)
        res = weak_ot.weak_ot_solve(nu, mu, th, method=args.method)
        classical = inequalities.classical_ot_1d(mu, nu, th)
        h = inequalities.relative_entropy(nu, mu)
        rep = Report("weak-ot", "T(nu|mu) = inf_p sum_i mu_i theta(|x_i - sum_j y_j p_ij|)",
                     "pass" if res.converged and res.value <= classical + 1e-7 else "fail",
                     values={"value": res.value, "classical": classical, "relative_entropy": h,
                             "iterations": res.iterations, "gap": res.gap, "converged": res.converged},
                     params={"cost": th.name, "method": res.method})
        rep.tables["kernel"] = ([f"y={y:g}" for y in nu.x], [tuple(r) for r in res.kernel])
        out.append(rep)
    if verify:
        # tilted targets are generated internally
        out.append(weak_ot.weak_transport_verify(mu, args.direction, cost.theta, args.a or 1.0,
                                                 n_tilts=args.tilts, seed=args.seed))
    return out


def cmd_concentration(args):
    mu, _ = _need(*parse_spec(args.spec), want_cost=False)
    if args.seed is None:
        raise UsageError("--seed is required for stochastic runs")
    cfg = concentration.ExperimentConfig(mu, N=args.N, M=args.M, zoo=args.zoo, seed=args.seed,
                                         t_grid=np.linspace(args.t_min, args.t_max, args.t_points))
    rep, _, _ = concentration.concentration_report(cfg)
    return [rep]


def cmd_chain(args):
    cost = costs.parse_cost(shlex.split(args.cost)) if args.cost else costs.quadratic(1.0)
    res = inequalities.constant_chain(args.direction, b=args.b, c=args.c, a=args.a, cost=cost,
                                      t0=args.t0, A=args.A, alpha=args.alpha,
                                      h=args.h if args.h else None)
    values = {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in res.items()
              if k not in ("direction", "cost")}
    return [Report("chain", f"constant map {args.direction}", "pass", values=values,
                   params={"cost": res["cost"]})]


def cmd_selftest(args):
    reps = selftest.run(chain=not args.quick, seed=args.seed or 0)
    return reps


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cvxlsi", description=__doc__.split("\n")[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, default=None, help="report directory")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=None, help="relative tolerance")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, spec=True, helptext=""):
        sp = sub.add_parser(name, parents=[common], help=helptext)
        if spec:
            sp.add_argument("spec", nargs="+", help="spec file or inline directives")
        sp.set_defaults(func=fn)
        return sp

    def fam(sp):
        sp.add_argument("--count", type=int, default=200)
        sp.add_argument("--L", type=float, default=1.0)

    sp = add("check-criterion", cmd_check_criterion, helptext="modulus criterion")
    sp.add_argument("--t0", type=float, default=None)
    sp.add_argument("--h-min", type=float, default=1e-3)
    sp.add_argument("--h-max", type=float, default=50.0)
    sp.add_argument("--h-points", type=int, default=121)
    sp = add("lsi-test", cmd_lsi_test, helptext="convex log-Sobolev inequality")
    sp.add_argument("--c", type=float, default=None)
    fam(sp)
    sp = add("dual-ic", cmd_dual_ic, helptext="dual infimum-convolution inequalities")
    sp.add_argument("--mode", choices=("minus", "plus", "two-sided"), default="minus")
    sp.add_argument("--a", type=float, default=None)
    sp.add_argument("--t", type=float, default=1.0)
    fam(sp)
    sp = add("poincare", cmd_poincare, helptext="convex Poincare inequality")
    sp.add_argument("--a", type=float, default=None)
    fam(sp)
    sp = add("infconv", cmd_infconv, helptext="evaluate Q_t on the test family")
    sp.add_argument("--t", type=float, default=1.0)
    sp.add_argument("--engine", default="auto")
    sp.add_argument("--x-min", type=float, default=-3.0)
    sp.add_argument("--x-max", type=float, default=3.0)
    sp.add_argument("--points", type=int, default=61)
    sp.add_argument("--count", type=int, default=5)
    sp.add_argument("--L", type=float, default=1.0)
    sp = add("weak-ot", cmd_weak_ot, helptext="barycentric weak transport T(nu|mu)")
    sp.add_argument("--nu", default=None, help="target measure directives (quoted)")
    sp.add_argument("--direction", choices=("none", "minus", "plus"), default="none")
    sp.add_argument("--a", type=float, default=None)
    sp.add_argument("--tilts", type=int, default=100)
    sp.add_argument("--method", choices=("exact", "frank-wolfe"), default="exact")
    sp = add("concentration", cmd_concentration, helptext="Monte Carlo tail fit")
    sp.add_argument("--N", type=int, default=4)
    sp.add_argument("--M", type=int, default=10 ** 5)
    sp.add_argument("--zoo", choices=concentration.ZOO, default="norm")
    sp.add_argument("--t-min", type=float, default=0.1)
    sp.add_argument("--t-max", type=float, default=4.0)
    sp.add_argument("--t-points", type=int, default=40)
    sp = add("chain", cmd_chain, spec=False, helptext="constant map between conditions")
    sp.add_argument("direction", choices=("b_to_c", "c_to_delta", "c_to_a", "a_to_c", "a_to_b", "b_to_a"))
    for k in ("b", "c", "a", "t0", "A", "alpha"):
        sp.add_argument(f"--{k}", type=float, default=None)
    sp.add_argument("--h", type=float, nargs="*", default=None)
    sp.add_argument("--cost", default=None, help="cost directive, e.g. 'quadratic 1' or 'hp 3'")
    sp = add("selftest", cmd_selftest, spec=False, helptext="invariant suites")
    sp.add_argument("--quick", action="store_true", help="skip the end-to-end chain")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_PASS
    try:
        reports = args.func(args)
    except (UsageError, ValueError, TypeError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DivergenceError, OverflowError, FloatingPointError) as e:
        print(f"divergence: {e}", file=sys.stderr)
        return EXIT_DIVERGENCE
    for i, rep in enumerate(reports):
        if i:
            print()
        text = rep.render()
        # tables go to files when --out is given
        print(text.split("\n# table:")[0].rstrip() if args.out else text.rstrip())
        if args.out:
            rep.write(args.out, f"{args.command}-{i}-{rep.check}")
    return EXIT_PASS if all(r.passed for r in reports) else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
