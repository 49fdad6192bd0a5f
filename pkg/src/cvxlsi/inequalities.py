"""Entropy functionals and executable checks of functional inequalities.

Every check sweeps a finite family of convex piecewise-linear test
functions.  A pass on the family is evidence, not a proof: the inequalities
quantify over all convex Lipschitz functions and the family is a finite
sample of that class.  Reports carry this caveat in their notes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, special

from . import costs as _costs
from .costs import CostFunction
from .errors import DivergenceError, PaddingError
from .infconv import GridFunction, q_values
from .measures import Atoms, Measure1D, Tolerance, median_support
from .report import FAIL, PASS, Report

DEFAULT_TOL = Tolerance(abs=1e-12, rel=1e-7)
FAMILY_CAVEAT = ("family pass is necessary-but-not-sufficient evidence: convex piecewise-linear "
                 "test functions sample, but do not exhaust, the convex Lipschitz class")


# ---------------------------------------------------------------------------
# integration helpers


def _breaks(phi) -> list[float]:
    return list(getattr(phi, "kinks", ()))


def _integrate(mu: Measure1D, fn: Callable, phi=None) -> float:
    """``int fn dmu`` over the whole line, splitting at the kinks of ``phi``."""
    return mu.expect(fn, breaks=_breaks(phi) if phi is not None else ())


def _deriv(phi, x):
    if hasattr(phi, "derivative"):
        return phi.derivative(x)
    raise TypeError("test function needs a derivative")


def _q_eval(f: GridFunction, theta: CostFunction, t: float):
    def q(x):
        x = np.asarray(x, dtype=float)
        return q_values(f, theta, t, x.ravel(), engine="exact").reshape(x.shape)
    return q


def _shift_for(mu: Measure1D, phi) -> float:
    """A value near the maximum of ``phi`` on the bulk of ``mu``."""
    if isinstance(mu, Atoms):
        return float(np.max(phi(mu.x)))
    lo, hi = float(mu.quantile(1e-9)), float(mu.isf(1e-9))
    return float(np.max(phi(np.linspace(lo, hi, 257))))


def log_partition(mu: Measure1D, phi) -> float:
    """``log int e^phi dmu``; ``inf`` when the integral diverges."""
    M = _shift_for(mu, phi)
    try:
        z = _integrate(mu, lambda x: np.exp(phi(x) - M), phi)
    except DivergenceError:
        return math.inf
    if not math.isfinite(z):
        return math.inf
    return M + math.log(z)


def _ent_kernel(w):
    """``w e^w - (e^w - 1)``, nonnegative; series near 0 avoids cancellation."""
    w = np.asarray(w, dtype=float)
    small = np.abs(w) < 1e-4
    ws = np.where(small, w, 0.0)
    series = ws * ws * (0.5 + ws * (1.0 / 3.0 + ws / 8.0))
    with np.errstate(over="ignore", invalid="ignore"):
        wb = np.where(small, 0.0, w)
        full = wb * np.exp(wb) - np.expm1(wb)
    return np.where(small, series, full)


def normalized_entropy(mu: Measure1D, phi) -> tuple[float, float]:
    """``(log Z, Ent(e^phi)/Z)`` with ``Z = int e^phi dmu``.

    Uses ``Ent/Z = int (w e^w - e^w + 1) dmu`` with ``w = phi - log Z``, whose
    integrand is pointwise nonnegative.
    """
    logz = log_partition(mu, phi)
    if not math.isfinite(logz):
        return math.inf, math.inf
    try:
        val = _integrate(mu, lambda x: _ent_kernel(phi(x) - logz), phi)
    except DivergenceError:
        return logz, math.inf
    return logz, max(val, 0.0)


def entropy(mu: Measure1D, phi) -> float:
    """``Ent(e^phi) = int phi e^phi - Z log Z``; ``inf`` on divergence."""
    logz, ent = normalized_entropy(mu, phi)
    if not math.isfinite(ent):
        return math.inf
    with np.errstate(over="ignore"):
        return float(np.exp(logz) * ent)


def relative_entropy(nu: Atoms, mu: Atoms, atol: float = 1e-12) -> float:
    """``sum nu_i log(nu_i / mu_i)``; ``inf`` if ``nu`` charges a point outside ``supp mu``."""
    idx = np.searchsorted(mu.x, nu.x)
    idx = np.clip(idx, 0, mu.x.size - 1)
    left = np.clip(idx - 1, 0, mu.x.size - 1)
    near = np.where(np.abs(mu.x[left] - nu.x) < np.abs(mu.x[idx] - nu.x), left, idx)
    match = np.abs(mu.x[near] - nu.x) <= atol * np.maximum(1.0, np.abs(nu.x))
    if not np.all(match):
        return math.inf
    return float(np.sum(special.rel_entr(nu.w, mu.w[near])))


def variance(mu: Measure1D, f) -> float:
    m = _integrate(mu, lambda x: f(x), f)
    return max(_integrate(mu, lambda x: (f(x) - m) ** 2, f), 0.0)


# ---------------------------------------------------------------------------
# test functions


@dataclass(frozen=True)
class TestFunctionFamily:
    """Seeded family of convex piecewise-linear, ``L``-Lipschitz functions.

    Random members have ``1..max_breaks`` kinks drawn in the bulk of the
    measure and sorted slopes drawn uniformly in ``[-L, L]``.  Specials are
    constants, ``+-L x``, ``L |x - q|``, hinges ``L [x - q]_+`` and
    ``L [q - x]_+`` and a three-piece maximum of affine functions, with
    ``q`` at quantiles of the measure.
    """

    seed: int = 0
    count: int = 200
    L: float = 1.0
    max_breaks: int = 6
    specials: bool = True
    quantiles: tuple = (0.1, 0.25, 0.5, 0.75, 0.9)

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError("L must be positive")
        if self.count < 0 or self.max_breaks < 1:
            raise ValueError("count >= 0 and max_breaks >= 1 required")


def _avoid_atoms(b: np.ndarray, mu: Measure1D | None) -> np.ndarray:
    """Move breakpoints sitting on (or very near) an atom by half the minimal gap."""
    if not isinstance(mu, Atoms) or mu.x.size < 2:
        if isinstance(mu, Atoms):
            return np.where(np.isclose(b, mu.x[0], rtol=0, atol=1e-12), b + 0.5, b)
        return b
    gap = float(np.min(np.diff(mu.x)))
    idx = np.clip(np.searchsorted(mu.x, b), 0, mu.x.size - 1)
    left = np.clip(idx - 1, 0, mu.x.size - 1)
    near = np.where(np.abs(mu.x[left] - b) < np.abs(mu.x[idx] - b), left, idx)
    close = np.abs(mu.x[near] - b) < gap / 4
    return np.where(close, mu.x[near] + gap / 2, b)


def generate_tests(family: TestFunctionFamily, mu: Measure1D | None = None) -> list[GridFunction]:
    rng = np.random.default_rng(family.seed)
    L = family.L
    if mu is not None:
        lo, hi = float(mu.quantile(0.01)), float(mu.isf(0.01))
        if isinstance(mu, Atoms):
            lo, hi = float(mu.x[0]), float(mu.x[-1])
        qs = [float(mu.quantile(q)) for q in family.quantiles]
    else:
        lo, hi = -2.0, 2.0
        qs = list(np.quantile(np.linspace(-2, 2, 101), family.quantiles))
    if hi <= lo:
        lo, hi = lo - 1.0, hi + 1.0
    span = max(1.0, 2 * (hi - lo))
    out: list[GridFunction] = []

    def add(breaks, slopes, label):
        b = _avoid_atoms(np.sort(np.asarray(breaks, dtype=float)), mu)
        b = np.unique(b)
        s = np.asarray(slopes, dtype=float)[: b.size + 1]
        out.append(GridFunction.piecewise_linear(b, s, 0.0, span=span, label=label))

    if family.specials:
        mid = 0.5 * (lo + hi)
        out.append(replace(GridFunction.constant(0.0, span), label="const0"))
        out.append(replace(GridFunction.constant(1.0, span), label="const1"))
        for sgn in (1.0, -1.0):
            add([], [sgn * L], f"linear{sgn * L:+g}")
            add([], [sgn * L / 2], f"linear{sgn * L / 2:+g}")
        for q in qs:
            add([q], [-L, L], f"abs(x-{q:.4g})")
            add([q], [0.0, L], f"hinge+(x-{q:.4g})")
            add([q], [-L, 0.0], f"hinge-({q:.4g}-x)")
        add([qs[0], qs[-1]], [-L, 0.0, L], "max-affine")
        add([qs[1], mid, qs[-2]], [-L, -L / 3, L / 3, L], "max-affine4")
    for i in range(family.count):
        k = int(rng.integers(1, family.max_breaks + 1))
        breaks = np.sort(rng.uniform(lo, hi, k))
        slopes = np.sort(rng.uniform(-L, L, k + 1))
        add(breaks, slopes, f"random{i}")
    return out


# ---------------------------------------------------------------------------
# inequality checks


@dataclass
class _Sweep:
    rows: list = field(default_factory=list)

    def add(self, label, lhs, rhs, ok):
        self.rows.append((label, lhs, rhs, _ratio(lhs, rhs), int(ok)))

    @property
    def failed(self) -> bool:
        return any(not r[4] for r in self.rows)

    def worst(self):
        """Failing rows first, then the largest ratio."""
        if not self.rows:
            return ("", math.nan, math.nan, math.nan, 1)
        return max(self.rows, key=lambda r: (not r[4], r[3]))


def _ratio(lhs, rhs):
    if rhs > DEFAULT_TOL.abs:
        return lhs / rhs
    # both sides at rounding level (constants): report the ratio as 0
    return 0.0 if lhs <= DEFAULT_TOL.abs else math.inf


def _finish(check, statement, sweep: _Sweep, values=None, params=None, notes=None) -> Report:
    verdict = FAIL if sweep.failed else PASS
    label, lhs, rhs, ratio, _ = sweep.worst()
    vals = {"worst_ratio": ratio, "lhs": lhs, "rhs": rhs, "functions": len(sweep.rows)}
    vals.update(values or {})
    rep = Report(check, statement, verdict, values=vals,
                 witness={"function": label},
                 params=params or {}, notes=(notes or []) + [FAMILY_CAVEAT])
    rep.tables["functions"] = (["function", "lhs", "rhs", "ratio", "ok"], sweep.rows)
    return rep


def _family(mu, family):
    if family is None:
        family = TestFunctionFamily()
    if isinstance(family, TestFunctionFamily):
        return generate_tests(family, mu), family.L
    funcs = list(family)
    return funcs, max((f.lip for f in funcs), default=0.0)


def lsi_test(mu: Measure1D, H: CostFunction, c: float, family=None,
             tol: Tolerance = DEFAULT_TOL) -> Report:
    """``Ent(e^phi) <= int H(c phi') e^phi dmu`` over the family.

    Both sides are divided by ``Z = int e^phi`` before comparison.  The
    inequality forces finite exponential moments of every order; a divergent
    moment at ``s = 2 c L`` is reported as a failure.
    """
    H = H.H
    funcs, L = _family(mu, family)
    params = {"c": c, "H": H.name, "L": L}
    s = 2 * c * L
    # atomic measures have finite exponential moments of every order (the
    # numeric value may still overflow), so only continuous laws are probed
    if s > 0 and not mu.is_atomic:
        try:
            mom = mu.exp_moment(s)
        except DivergenceError:
            mom = math.inf
        if not math.isfinite(mom):
            return Report("lsi", "Ent(e^phi) <= int H(c phi') e^phi dmu", FAIL,
                          values={"worst_ratio": math.inf, "exp_moment_divergent_at": s},
                          params=params,
                          notes=[f"exponential moment of order {s:g} diverges; the inequality "
                                 "requires finite exponential moments of all orders"])
    sweep = _Sweep()
    for phi in funcs:
        logz, lhs = normalized_entropy(mu, phi)
        if not math.isfinite(logz):
            sweep.add(phi.label, math.inf, math.inf, False)
            continue
        try:
            rhs = _integrate(mu, lambda x: H(c * _deriv(phi, x)) * np.exp(phi(x) - logz), phi)
        except DivergenceError:
            rhs = math.inf
        sweep.add(phi.label, lhs, rhs, tol.leq(lhs, rhs))
    return _finish("lsi", "Ent(e^phi) <= int H(c phi') e^phi dmu", sweep, params=params)


def convex_poincare_test(mu: Measure1D, a: float, family=None, tol: Tolerance = DEFAULT_TOL) -> Report:
    """``Var(f) <= (1/(2 a^2)) int f'^2 dmu``; also the largest passing ``a``."""
    funcs, L = _family(mu, family)
    sweep = _Sweep()
    a_max = math.inf
    a_arg = ""
    for f in funcs:
        var = variance(mu, f)
        energy = _integrate(mu, lambda x: _deriv(f, x) ** 2, f)
        rhs = energy / (2 * a * a)
        sweep.add(f.label, var, rhs, tol.leq(var, rhs))
        if var > tol.abs:
            cand = math.sqrt(energy / (2 * var))
            if cand < a_max:
                a_max, a_arg = cand, f.label
    return _finish("poincare", "Var(f) <= 1/(2a^2) int |f'|^2 dmu", sweep,
                   values={"a_max": a_max, "a_max_function": a_arg}, params={"a": a, "L": L})


def dual_ic_test(mu: Measure1D, theta: CostFunction, t: float = 1.0, mode: str = "minus",
                 family=None, tol: Tolerance = DEFAULT_TOL) -> Report:
    """Dual forms of the weak transport-entropy inequalities.

    ``minus``      ``log int e^{Q_t f} <= int f``
    ``plus``       ``int Q_t f + log int e^{-f} <= 0``
    ``two-sided``  ``log int e^{Q_t f} + log int e^{-f} <= 0``

    The comparisons are made on the log scale; the reported ratio is
    ``exp(lhs - rhs)``.
    """
    if mode not in ("minus", "plus", "two-sided"):
        raise ValueError(f"unknown mode {mode!r}")
    theta = theta.theta
    funcs, L = _family(mu, family)
    sweep = _Sweep()
    statements = {"minus": "int e^{Q_t f} dmu <= exp(int f dmu)",
                  "plus": "exp(int Q_t f dmu) int e^{-f} dmu <= 1",
                  "two-sided": "int e^{Q_t f} dmu int e^{-f} dmu <= 1"}
    for f in funcs:
        q = _q_eval(f, theta, t)
        try:
            if mode == "minus":
                lhs = log_partition(mu, _Wrapped(q, f))
                rhs = _integrate(mu, f, f)
            elif mode == "plus":
                lhs = _integrate(mu, q, f) + log_partition(mu, _Wrapped(lambda x: -f(x), f))
                rhs = 0.0
            else:
                lhs = log_partition(mu, _Wrapped(q, f)) + log_partition(mu, _Wrapped(lambda x: -f(x), f))
                rhs = 0.0
        except PaddingError:
            raise
        ok = lhs <= rhs + tol.rel * max(1.0, abs(rhs)) + tol.abs
        row_ratio_lhs, row_ratio_rhs = math.exp(min(lhs - rhs, 700.0)), 1.0
        sweep.add(f.label, row_ratio_lhs, row_ratio_rhs, ok)
    return _finish("dual-ic", statements[mode], sweep,
                   params={"mode": mode, "t": t, "cost": theta.name, "L": L})


class _Wrapped:
    """Callable carrying the kinks of a test function for quadrature splits."""

    def __init__(self, fn, like):
        self.fn = fn
        self.kinks = getattr(like, "kinks", ())

    def __call__(self, x):
        return self.fn(x)


def bounded_support_ic_test(mu: Measure1D, D: float, adversarial: bool = False, family=None,
                            a_max: float = 2.0 ** 40, tol: Tolerance = DEFAULT_TOL) -> Report:
    """Infimum-convolution inequality with the capped cost ``theta_D``.

    Forward (``diam supp mu <= D``): the two-sided inequality over the
    family.  Adversarial (``diam > D``): with ``x0 = inf supp mu`` and
    ``eps = (diam - D)/2``, doubles ``a`` in ``phi_a = a dist(x, B(x0, eps))``
    until ``int e^{Q phi_a} int e^{-phi_a} > 1``.
    """
    _, s_mu, t_mu = median_support(mu)
    diam = t_mu - s_mu
    th = _costs.theta_D(D)
    if not adversarial:
        if diam > D * (1 + 1e-12):
            return Report("bounded-support", "int e^{Q phi} int e^{-phi} <= 1 with theta_D", FAIL,
                          values={"diameter": diam}, params={"D": D},
                          notes=["support diameter exceeds D; forward statement does not apply"])
        rep = dual_ic_test(mu, th, 1.0, "two-sided", family, tol)
        rep.check = "bounded-support"
        rep.values["diameter"] = diam
        return rep
    if not diam > D:
        return Report("bounded-support-adversarial", "witness phi_a with product > 1", FAIL,
                      values={"diameter": diam, "found": False}, params={"D": D},
                      notes=["support diameter within D; no witness can exist"])
    if not math.isfinite(diam):
        eps = 1.0
        x0 = float(mu.quantile(0.25))
    else:
        eps = (diam - D) / 2
        x0 = s_mu
    a = 1.0
    history = []
    while a <= a_max:
        phi = GridFunction.piecewise_linear([x0 - eps, x0 + eps], [-a, 0.0, a], 0.0,
                                            span=max(1.0, 2 * diam if math.isfinite(diam) else 10.0))
        q = _q_eval(phi, th, 1.0)
        lp = log_partition(mu, _Wrapped(q, phi))
        lm = log_partition(mu, _Wrapped(lambda x: -phi(x), phi))
        prod_log = lp + lm
        history.append((a, prod_log))
        if prod_log > tol.abs:
            rep = Report("bounded-support-adversarial", "witness phi_a with product > 1", PASS,
                         values={"found": True, "a": a, "log_product": prod_log, "diameter": diam},
                         witness={"a": a, "x0": x0, "eps": eps}, params={"D": D})
            rep.tables["search"] = (["a", "log_product"], history)
            return rep
        a *= 2.0
    rep = Report("bounded-support-adversarial", "witness phi_a with product > 1", FAIL,
                 values={"found": False, "diameter": diam}, params={"D": D, "a_max": a_max})
    rep.tables["search"] = (["a", "log_product"], history)
    return rep


# ---------------------------------------------------------------------------
# constants


def kappa(theta: CostFunction, t0: float) -> float:
    """``min(1, t0) / (210 theta^{-1}(2 + t0^2))``."""
    return min(1.0, t0) / (210.0 * float(_costs.theta_inverse(theta, 2.0 + t0 * t0)))


def kappa1(theta: CostFunction, t0: float) -> float:
    """``t0 / (8 theta^{-1}(log 3 + t0^2))``."""
    return t0 / (8.0 * float(_costs.theta_inverse(theta, math.log(3.0) + t0 * t0)))


def delta_bound(c: float, h, sharpened: bool = False):
    """Modulus bound implied by the log-Sobolev constant ``c``."""
    h = np.asarray(h, dtype=float)
    if sharpened:
        return 8 * c * (2 / 3 + np.sqrt(h / 2) + 2 * (2 * h / 9) ** 0.25)
    return 16 * c * (2 / 3 + np.sqrt(h / 2))


def constant_chain(direction: str, *, b: float | None = None, c: float | None = None,
                   a: float | None = None, cost: CostFunction | None = None,
                   t0: float | None = None, A: float | None = None, alpha: float | None = None,
                   h=None) -> dict:
    """Translate constants between equivalent conditions.

    ``b_to_c``     log-Sobolev constant from the modulus constant, ``c = 1/(kappa b)``
    ``c_to_delta`` modulus bounds implied by ``c`` (plain and sharpened)
    ``c_to_a``     transport constant from ``c``, ``a = ((alpha-1)/A)^(1/alpha) / c``
    ``a_to_c``     log-Sobolev constant from ``a``, ``c = 2/a``
    ``a_to_b``     modulus constant from ``a``: ``kappa1 a`` and the ``C_theta`` form
    ``b_to_a``     transport constant from ``b``, ``a = kappa b``
    """
    cost = cost if cost is not None else _costs.quadratic(1.0)
    th = cost.theta
    t0 = th.t0 if t0 is None else t0
    out: dict = {"direction": direction, "t0": t0, "cost": th.name}
    if direction == "b_to_c":
        k = kappa(th, t0)
        out.update(kappa=k, c=1.0 / (k * b))
    elif direction == "b_to_a":
        k = kappa(th, t0)
        out.update(kappa=k, a=k * b)
    elif direction == "c_to_delta":
        hh = np.asarray(h if h is not None else [0.0, 1.0, 10.0], dtype=float)
        out.update(c=c, h=hh, delta_bound=delta_bound(c, hh),
                   delta_bound_sharpened=delta_bound(c, hh, sharpened=True))
    elif direction == "c_to_a":
        H = cost.H
        A = A if A is not None else H.A
        alpha = alpha if alpha is not None else H.alpha
        if A is None or alpha is None:
            raise ValueError("c_to_a needs scaling constants (A, alpha)")
        out.update(A=A, alpha=alpha, a=((alpha - 1) / A) ** (1 / alpha) / c)
    elif direction == "a_to_c":
        out.update(c=2.0 / a)
    elif direction == "a_to_b":
        k1 = kappa1(th, t0)
        ct = _costs.c_theta(th)
        inner = math.log(2 * math.exp(ct / 2) - 1) / 2
        b42 = min(a, 1.0) / 16 / (1 + float(_costs.theta_inverse(th, inner)) / (a * t0))
        out.update(kappa1=k1, b=k1 * a, b_minus=b42, c_theta=ct)
    else:
        raise ValueError(f"unknown direction {direction!r}")
    return out


# ---------------------------------------------------------------------------
# classical transport


def classical_ot_1d(mu: Measure1D, nu: Measure1D, theta: CostFunction) -> float:
    """``int_0^1 theta(|F_mu^{-1}(u) - F_nu^{-1}(u)|) du`` (monotone coupling).

    Exact for atomic inputs: both quantile functions are constant between
    consecutive merged cumulative levels.
    """
    th = theta.theta
    if isinstance(mu, Atoms) and isinstance(nu, Atoms):
        levels = np.union1d(np.cumsum(mu.w), np.cumsum(nu.w))
        levels = levels[(levels > 0) & (levels < 1 - 1e-15)]
        levels = np.concatenate([[0.0], levels, [1.0]])
        du = np.diff(levels)
        mid = 0.5 * (levels[:-1] + levels[1:])
        keep = du > 0
        xm = mu.quantile(mid[keep])
        xn = nu.quantile(mid[keep])
        return float(np.dot(du[keep], th(np.abs(xm - xn))))

    def q(m, u):
        return m.quantile(u) if u <= 0.5 else m.isf(1.0 - u)

    def g(u):
        return float(th(abs(q(mu, u) - q(nu, u))))

    pts = []
    for m in (mu, nu):
        if isinstance(m, Atoms):
            pts.extend(np.cumsum(m.w)[:-1].tolist())
    val = 0.0
    edges = np.unique(np.concatenate([[0.0, 0.5, 1.0], pts]))
    for lo, hi in zip(edges[:-1], edges[1:]):
        v, _ = integrate.quad(g, lo, hi, limit=400)
        val += v
    return val
