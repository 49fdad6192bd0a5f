"""Invariant suites runnable from the command line.

``gaussian_chain`` runs the full equivalence chain on a discretized standard
Gaussian: the modulus criterion yields ``b``, the constant map turns ``b``
into a log-Sobolev constant ``c`` and then into a transport constant ``a``,
and each downstream inequality is checked with the chained constant.
"""
from __future__ import annotations

import math
import time

import numpy as np

from . import costs, inequalities, infconv, measures, transport_map, weak_ot
from .report import FAIL, PASS, Report


def gaussian_chain(n: int = 10 ** 4, n_weak: int = 32, n_tilts: int = 100, seed: int = 0,
                   family=None) -> list[Report]:
    t_start = time.perf_counter()
    g = measures.family("gaussian", 0.0, 1.0)
    mu = measures.discretize(g, n)
    H = costs.quadratic(1.0)
    theta = H.theta
    reports = [transport_map.criterion_check(mu, theta)]
    b = reports[0]["b_best"]
    c = inequalities.constant_chain("b_to_c", b=b, cost=theta, t0=1.0)["c"]
    a = inequalities.constant_chain("c_to_a", c=c, cost=H)["a"]
    family = family or inequalities.TestFunctionFamily(seed=seed, count=100)
    reports.append(inequalities.lsi_test(mu, H, c, family))
    reports.append(inequalities.dual_ic_test(mu, costs.transform(theta, 1.0, a), 1.0, "minus", family))
    reports.append(inequalities.convex_poincare_test(mu, a, family))
    reports.append(weak_ot.weak_transport_verify(measures.discretize(g, n_weak), "minus", theta, a,
                                                 n_tilts=n_tilts, seed=seed))
    elapsed = time.perf_counter() - t_start
    ok = all(r.passed for r in reports)
    summary = Report("gaussian-chain", "modulus criterion => LSI => weak transport => Poincare, chained constants",
                     PASS if ok else FAIL,
                     values={"b": b, "c": c, "a": a, "seconds": elapsed,
                             "verdicts": [f"{r.check}={r.verdict}" for r in reports]},
                     params={"n": n, "n_weak": n_weak, "n_tilts": n_tilts, "seed": seed})
    return [summary] + reports


def quick_suite() -> list[Report]:
    """Small exact-oracle checks, each well under a second."""
    out = []
    theta = costs.quadratic(1.0).theta
    tau = transport_map.tau()
    h = transport_map.DEFAULT_H_GRID
    err = float(np.max(np.abs(transport_map.modulus_curve(tau, h).delta - h)))
    out.append(Report("identity-transport", "Delta_tau(h) = h", PASS if err <= 1e-10 else FAIL,
                      values={"max_error": err}))
    rep = transport_map.criterion_check(measures.two_point(), theta)
    ok = abs(rep["b_best"] - 1.0) <= 1e-6
    out.append(Report("two-point-criterion", "b_best = 1", PASS if ok else FAIL, values={"b_best": rep["b_best"]}))
    rep = transport_map.criterion_check(tau, theta)
    ok = (not rep.passed) and rep["ratio_at_hmax"] < 0.15
    out.append(Report("exponential-failure", "criterion fails on tau", PASS if ok else FAIL,
                      values={"verdict": rep.verdict, "ratio_at_hmax": rep["ratio_at_hmax"]}))
    ct = costs.c_theta(theta)
    ref = costs.c_theta_quadratic_closed()
    out.append(Report("c-theta", "C_theta = 4 + 4/ln2 + 2/ln^2 2", PASS if abs(ct / ref - 1) <= 1e-6 else FAIL,
                      values={"c_theta": ct, "closed_form": ref}))
    gap, _ = infconv.maurey_envelope_gap(np.linspace(0.0, 5.0, 10 ** 4))
    out.append(Report("maurey-envelope", "e^k(u) <= 2 - e^-u", PASS if gap <= 0 else FAIL, values={"max_gap": gap}))
    rep = transport_map.tail_cost_bound(tau, theta, 1.0)
    ok = abs(rep["worst_ratio"] - 2.0) <= 1e-6
    out.append(Report("tail-cost-sharpness", "tau, a = 1: worst ratio 2", PASS if ok else FAIL,
                      values={"worst_ratio": rep["worst_ratio"]}))
    v1 = weak_ot.weak_ot_solve(measures.dirac(0.5), measures.two_point(), theta).value
    v2 = weak_ot.weak_ot_solve(measures.two_point(), measures.dirac(0.5), theta).value
    ok = abs(v1 - 0.25) <= 1e-7 and abs(v2) <= 1e-7
    out.append(Report("weak-ot-asymmetry", "T(delta_1/2 | two-point) = 1/4, reverse = 0", PASS if ok else FAIL,
                      values={"forward": v1, "reverse": v2}))
    return out


def run(chain: bool = True, **kw) -> list[Report]:
    reports = quick_suite()
    if chain:
        reports += gaussian_chain(**kw)
    return reports


def format_summary(reports: list[Report]) -> str:
    return "\n".join(f"{r.check}: {r.verdict}" for r in reports)


if __name__ == "__main__":
    reps = run()
    print(format_summary(reps))
    raise SystemExit(0 if all(r.passed for r in reps) else 1)
