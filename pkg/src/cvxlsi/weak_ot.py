"""Barycentric weak transport between atomic measures.

``weak_cost(nu, mu)`` is the infimum over kernels ``p`` from the atoms of
``mu`` to the atoms of ``nu`` with ``sum_i mu_i p_ij = nu_j`` of

    sum_i mu_i theta(|x_i - sum_j y_j p_ij|).

Argument order follows the usual ``T(nu | mu)`` notation: the second
argument is the source whose atoms index the rows.

The objective only depends on the plan ``pi = mu_i p_ij`` through the row
barycenters ``z``.  On the line the optimal barycenters do not depend on
``theta``: with ``W_k`` the cumulative source masses and
``H(W_k) = int_0^{W_k} F_nu^{-1} - sum_{i<=k} mu_i x_i``, the shifts
``z_i - x_i`` are the slopes of the least concave majorant of ``H`` (the
``exact`` method).  A kernel with those barycenters is then found by a
linear feasibility solve.  The ``frank-wolfe`` method minimizes over plans
directly: the gradient with respect to ``pi_ij`` factors as ``g_i y_j``, so
the linear oracle is the transportation problem with a product cost, solved
exactly by the north-west corner rule after sorting ``g`` decreasingly and
``y`` increasingly.  Both report the conditional-gradient gap of the
returned plan as an optimality certificate.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import costs as _costs
from .costs import CostFunction
from .inequalities import classical_ot_1d, relative_entropy
from .measures import Atoms
from .report import FAIL, PASS, Report

MAX_ATOMS = 64
MARGINAL_TOL = 1e-9


@dataclass
class Coupling:
    """Kernel ``p`` (rows = source atoms) with its marginals."""

    x: np.ndarray
    mu: np.ndarray
    y: np.ndarray
    nu: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        self.x, self.mu = np.asarray(self.x, float), np.asarray(self.mu, float)
        self.y, self.nu = np.asarray(self.y, float), np.asarray(self.nu, float)
        self.p = np.asarray(self.p, float)
        if self.p.shape != (self.x.size, self.y.size):
            raise ValueError("kernel shape does not match the atom counts")

    @classmethod
    def from_plan(cls, source: Atoms, target: Atoms, plan) -> "Coupling":
        plan = np.asarray(plan, float)
        return cls(source.x, source.w, target.x, target.w, plan / source.w[:, None])

    @property
    def plan(self) -> np.ndarray:
        return self.mu[:, None] * self.p

    @property
    def barycenters(self) -> np.ndarray:
        return self.p @ self.y

    def validate(self, tol: float = MARGINAL_TOL) -> None:
        if np.any(self.p < -tol):
            raise ValueError("kernel has negative entries")
        rows = np.abs(self.p.sum(axis=1) - 1.0).max()
        cols = np.abs(self.mu @ self.p - self.nu).max()
        if rows > tol or cols > tol:
            raise ValueError(f"marginal violation: rows {rows:.3g}, columns {cols:.3g}")


@dataclass
class WeakOtResult:
    value: float
    kernel: np.ndarray
    barycenters: np.ndarray
    iterations: int
    gap: float
    converged: bool = True
    method: str = "frank-wolfe"
    coupling: Coupling | None = field(default=None, repr=False)


def _objective(theta: CostFunction, x, w, b):
    """Value as a function of the barycenter-times-mass vector ``b = pi @ y``."""
    return float(np.dot(w, theta(np.abs(x - b / w))))


def weak_cost_eval(c: Coupling, theta: CostFunction, tol: float = MARGINAL_TOL) -> float:
    c.validate(tol)
    return _objective(theta, c.x, c.mu, c.plan @ c.y)


def _check_inputs(nu: Atoms, mu: Atoms, max_atoms: int):
    if not isinstance(nu, Atoms) or not isinstance(mu, Atoms):
        raise TypeError("weak transport is implemented for atomic measures only")
    if abs(math.fsum(nu.w) - math.fsum(mu.w)) > MARGINAL_TOL:
        raise ValueError("infeasible marginals: total masses differ")
    if max(nu.x.size, mu.x.size) > max_atoms:
        raise ValueError(f"atom count exceeds the solver budget ({max_atoms})")


def nw_corner(row_mass, col_mass, row_order, col_order) -> np.ndarray:
    """North-west corner plan visiting rows and columns in the given orders."""
    plan = np.zeros((row_mass.size, col_mass.size))
    r, c = row_mass[row_order].copy(), col_mass[col_order].copy()
    i = j = 0
    while i < r.size and j < c.size:
        m = min(r[i], c[j])
        plan[row_order[i], col_order[j]] += m
        r[i] -= m
        c[j] -= m
        if r[i] <= c[j]:
            i += 1
        else:
            j += 1
    return plan


def transport_oracle(g, mu_w, nu_w, y):
    """Plan minimizing ``sum_ij g_i y_j pi_ij`` over the transportation polytope."""
    return nw_corner(mu_w, nu_w, np.argsort(-g, kind="stable"), np.argsort(y, kind="stable"))


def _line_search(f, df, b, d, gmax: float) -> float:
    """Minimizer of ``f(b + t d)`` over ``[0, gmax]`` from the monotone slope ``df``."""
    if gmax <= 0:
        return 0.0
    lo, hi = df(b, d), df(b + gmax * d, d)
    if lo >= 0:
        return 0.0
    if hi <= 0:
        return gmax
    # tolerances sit at rounding level; keep the last iterate if brentq stalls there
    t, _ = optimize.brentq(lambda t: df(b + t * d, d), 0.0, gmax, xtol=1e-15 * gmax, rtol=1e-15,
                           maxiter=200, full_output=True, disp=False)
    return t if f(b + t * d) <= f(b) else 0.0


def optimal_barycenters(nu: Atoms, mu: Atoms) -> np.ndarray:
    """Row barycenters of an optimal kernel, common to every convex ``theta``."""
    W = np.concatenate([[0.0], np.cumsum(mu.w)])
    V = np.concatenate([[0.0], np.cumsum(nu.w)])
    W[-1] = V[-1] = 1.0
    G = np.interp(W, V, np.concatenate([[0.0], np.cumsum(nu.w * nu.x)]))
    H = G - np.concatenate([[0.0], np.cumsum(mu.w * mu.x)])
    hull: list[int] = []
    for k in range(W.size):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            if (W[b] - W[a]) * (H[k] - H[a]) - (H[b] - H[a]) * (W[k] - W[a]) >= 0:
                hull.pop()
            else:
                break
        hull.append(k)
    M = np.interp(W, W[hull], H[hull])
    return mu.x + np.diff(M) / mu.w


def realize_barycenters(nu: Atoms, mu: Atoms, z) -> np.ndarray | None:
    """A plan with marginals ``mu``, ``nu`` and row barycenters ``z`` (``None`` if infeasible)."""
    n, m = mu.x.size, nu.x.size
    A = np.vstack([np.kron(np.eye(n), np.ones(m)),
                   np.kron(np.ones(n), np.eye(m)),
                   np.kron(np.eye(n), nu.x)])
    rhs = np.concatenate([mu.w, nu.w, mu.w * np.asarray(z, float)])
    res = optimize.linprog(np.zeros(n * m), A_eq=A, b_eq=rhs, bounds=(0, None), method="highs",
                           options={"primal_feasibility_tolerance": 1e-10,
                                    "dual_feasibility_tolerance": 1e-10})
    if res.status != 0:
        return None
    plan = np.clip(res.x.reshape(n, m), 0.0, None)
    # remove the solver's residual on the row sums; the column error stays at its level
    return plan * (mu.w / plan.sum(axis=1))[:, None]


def _fw_gap(theta: CostFunction, nu: Atoms, mu: Atoms, plan: np.ndarray) -> float:
    b = plan @ nu.x
    g = theta.derivative(b / mu.w - mu.x)
    if not np.all(np.isfinite(g)):
        return math.inf
    s = transport_oracle(g, mu.w, nu.w, nu.x)
    return float(np.dot(g, b - s @ nu.x))


def weak_ot_solve(nu: Atoms, mu: Atoms, theta: CostFunction, gap_tol: float = 1e-7,
                  max_iter: int = 20000, max_atoms: int = MAX_ATOMS,
                  method: str = "exact") -> WeakOtResult:
    """``T_theta(nu | mu)``; ``method`` is ``exact`` or ``frank-wolfe``.

    The exact method falls back to Frank-Wolfe if the kernel cannot be
    realized to the marginal tolerance.
    """
    _check_inputs(nu, mu, max_atoms)
    if method not in ("exact", "frank-wolfe"):
        raise ValueError(f"unknown method {method!r}")
    if method == "exact":
        z = optimal_barycenters(nu, mu)
        plan = realize_barycenters(nu, mu, z)
        if plan is not None:
            coupling = Coupling.from_plan(mu, nu, plan)
            try:
                value = weak_cost_eval(coupling, theta)
            except ValueError:
                value = None
            if value is not None:
                gap = _fw_gap(theta, nu, mu, plan) if math.isfinite(value) else 0.0
                return WeakOtResult(value=value, kernel=coupling.p, barycenters=coupling.barycenters,
                                    iterations=1, gap=gap,
                                    converged=gap <= gap_tol * (1.0 + abs(value)),
                                    method="exact", coupling=coupling)
    return _frank_wolfe(nu, mu, theta, gap_tol, max_iter)


def _frank_wolfe(nu: Atoms, mu: Atoms, theta: CostFunction, gap_tol: float,
                 max_iter: int) -> WeakOtResult:
    """Pairwise Frank-Wolfe with exact line search."""
    x, w, y = mu.x, mu.w, nu.x
    y_order = np.argsort(y, kind="stable")

    def grad_rows(bv):
        return theta.derivative(bv / w - x)

    def oracle(g):
        order = np.argsort(-g, kind="stable")
        return tuple(order), nw_corner(w, nu.w, order, y_order)

    def f(bv):
        return _objective(theta, x, w, bv)

    def df(bv, d):
        return float(np.dot(grad_rows(bv), d))

    # active vertices keyed by their row ordering; images b = plan @ y kept as rows of VB
    key0, v0 = oracle(grad_rows(w * float(np.dot(nu.w, y))))
    index = {key0: 0}
    verts = [v0]
    VB = (v0 @ y)[None, :]
    alpha = np.array([1.0])
    b = VB[0].copy()
    val = f(b)
    gap = math.inf
    it = 0
    for it in range(1, max_iter + 1):
        g = grad_rows(b)
        key, s = oracle(g)
        sb = s @ y
        gap = float(np.dot(g, b - sb))
        if gap <= gap_tol * (1.0 + abs(val)):
            break
        k_s = index.get(key)
        if k_s is None:
            k_s = len(verts)
            index[key] = k_s
            verts.append(s)
            VB = np.vstack([VB, sb])
            alpha = np.append(alpha, 0.0)
        live = alpha > 0
        scores = np.where(live, VB @ g, -np.inf)
        k_away = int(np.argmax(scores))
        d = sb - VB[k_away]
        gmax = alpha[k_away]
        step = _line_search(f, df, b, d, gmax)
        if step > 0.0:
            alpha[k_s] += step
            alpha[k_away] -= step
        else:
            # pairwise step stalled; take a plain Frank-Wolfe step
            d = sb - b
            step = _line_search(f, df, b, d, 1.0)
            alpha *= 1.0 - step
            alpha[k_s] += step
        alpha[alpha < 1e-15] = 0.0
        alpha /= alpha.sum()
        b = alpha @ VB
        val = f(b)
    plan = sum(a * v for a, v in zip(alpha, verts) if a > 0)
    coupling = Coupling.from_plan(mu, nu, plan)
    converged = gap <= gap_tol * (1.0 + abs(val))
    return WeakOtResult(value=weak_cost_eval(coupling, theta), kernel=coupling.p,
                        barycenters=coupling.barycenters, iterations=it, gap=gap,
                        converged=converged, coupling=coupling)


def brute_force(nu: Atoms, mu: Atoms, theta: CostFunction, resolution: float = 1e-3,
                final: float = 1e-9) -> WeakOtResult:
    """Grid enumeration of plans for at most 3x3 atoms, then grid zooming.

    Plans are parametrized by the unit cube: the free entries ``pi_ij``
    (``i < n-1``, ``j < m-1``) are filled in row-major order, each at a
    fraction ``u_ij`` of its feasible interval given the entries before it,
    so every cube point is a plan and every plan is reached.  The first pass
    uses a uniform grid (resolution ``resolution`` where the dimension allows
    it); each zoom pass re-grids a box of four cells around the incumbent
    until the cell width drops below ``final``.
    """
    _check_inputs(nu, mu, 3)
    n, m = mu.x.size, nu.x.size
    d = (n - 1) * (m - 1)

    def complete(u):
        k = u.shape[0]
        plan = np.zeros((k, n, m))
        col = np.broadcast_to(nu.w, (k, m)).copy()
        for i in range(n - 1):
            row = np.full(k, mu.w[i])
            for j in range(m - 1):
                rest = col[:, j + 1:].sum(axis=1)
                lo = np.maximum(0.0, row - rest)
                hi = np.minimum(row, col[:, j])
                v = lo + u[:, i * (m - 1) + j] * np.maximum(hi - lo, 0.0)
                plan[:, i, j] = v
                row -= v
                col[:, j] -= v
            plan[:, i, m - 1] = np.maximum(row, 0.0)
            col[:, m - 1] -= plan[:, i, m - 1]
        plan[:, n - 1, :] = np.maximum(col, 0.0)
        return plan

    def values(plan):
        bvec = plan @ nu.x
        return np.sum(mu.w * theta(np.abs(mu.x - bvec / mu.w)), axis=1)

    if d == 0:
        plan = complete(np.zeros((1, 0)))
        c = Coupling.from_plan(mu, nu, plan[0])
        return WeakOtResult(weak_cost_eval(c, theta), c.p, c.barycenters, 1, 0.0, method="brute-force",
                            coupling=c)
    lo, hi = np.zeros(d), np.ones(d)
    k = int(min(round(1 / resolution) + 1, max(3, math.floor(2e5 ** (1 / d)))))
    best_v, best = math.inf, None
    passes = 0
    while True:
        passes += 1
        axes = [np.linspace(lo[i], hi[i], k) for i in range(d)]
        grid = np.array(list(itertools.product(*axes))) if d > 1 else axes[0][:, None]
        vals = values(complete(grid))
        j = int(np.argmin(vals))
        if vals[j] <= best_v:
            best_v, best = float(vals[j]), grid[j]
        step = (hi - lo) / (k - 1)
        if np.max(step) < final or passes > 200:
            break
        lo = np.maximum(best - 2 * step, 0.0)
        hi = np.minimum(best + 2 * step, 1.0)
        k = 9
    plan = complete(best[None, :])
    c = Coupling.from_plan(mu, nu, plan[0])
    return WeakOtResult(weak_cost_eval(c, theta, tol=1e-12), c.p, c.barycenters, passes, 0.0,
                        method="brute-force", coupling=c)


# ---------------------------------------------------------------------------
# verification of the weak transport-entropy inequalities


def tilt(mu: Atoms, s: float, kind: str = "linear") -> Atoms:
    """``nu_s ∝ e^{s x} mu`` (``linear``) or ``e^{s |x - med|} mu`` (``abs``)."""
    z = mu.x if kind == "linear" else np.abs(mu.x - float(mu.quantile(0.5)))
    logw = np.log(mu.w) + s * z
    logw -= logw.max()
    w = np.exp(logw)
    w = np.maximum(w / w.sum(), 1e-300)
    return Atoms(mu.x, w / w.sum())


def sample_reweightings(mu: Atoms, n_tilts: int = 100, n_dirichlet: int = 0, seed: int = 0,
                        s_max: float | None = None) -> list[tuple[str, Atoms]]:
    """Exponential tilts (linear and absolute) and Dirichlet reweightings of ``mu``."""
    rng = np.random.default_rng(seed)
    if s_max is None:
        sd = math.sqrt(max(mu.variance(), 1e-300))
        s_max = 2.0 / sd
    out = []
    for i in range(n_tilts):
        kind = "linear" if i % 2 == 0 else "abs"
        s = float(rng.uniform(-s_max, s_max))
        out.append((f"tilt-{kind}({s:.4g})", tilt(mu, s, kind)))
    for i in range(n_dirichlet):
        g = rng.dirichlet(np.ones(mu.x.size))
        w = mu.w * g
        out.append((f"dirichlet{i}", Atoms(mu.x, w / w.sum())))
    return out


def weak_transport_verify(mu: Atoms, direction: str, theta: CostFunction, a: float,
                          nus=None, n_tilts: int = 100, n_dirichlet: int = 0, seed: int = 0,
                          s_max: float | None = None, jensen_tol: float = 1e-7,
                          tol: float = 1e-9) -> Report:
    """Check ``T_{theta(a.)}(mu|nu) <= H(nu|mu)`` (``minus``) or
    ``T_{theta(a.)}(nu|mu) <= H(nu|mu)`` (``plus``) over sampled ``nu``.

    Every solved instance is also checked against the classical cost with the
    same ``theta(a.)`` (Jensen domination).
    """
    if direction not in ("minus", "plus"):
        raise ValueError(f"unknown direction {direction!r}")
    cost = _costs.transform(theta.theta, 1.0, a)
    if nus is None:
        nus = sample_reweightings(mu, n_tilts, n_dirichlet, seed, s_max)
    else:
        nus = [(getattr(v, "label", f"nu{i}"), v) for i, v in enumerate(nus)]
    rows = []
    worst = None
    jensen_ok = True
    converged = True
    for label, nu in nus:
        h = relative_entropy(nu, mu)
        if direction == "minus":
            target, source = mu, nu
        else:
            target, source = nu, mu
        res = weak_ot_solve(target, source, cost)
        converged &= res.converged
        classical = classical_ot_1d(source, target, cost)
        j_ok = res.value <= classical + jensen_tol
        jensen_ok &= j_ok
        ok = res.value <= h + tol * max(1.0, h)
        ratio = res.value / h if h > 0 else (0.0 if res.value <= tol else math.inf)
        rows.append((label, res.value, h, ratio, classical, int(ok), int(j_ok)))
        key = (not ok, ratio)
        if worst is None or key > worst[0]:
            worst = (key, label, res.value, h)
    failed = any(not r[5] for r in rows) or not jensen_ok
    statement = ("T(mu|nu) <= H(nu|mu)" if direction == "minus" else "T(nu|mu) <= H(nu|mu)")
    rep = Report("weak-transport", statement + " with cost theta(a x)", FAIL if failed else PASS,
                 values={"samples": len(rows), "worst_ratio": worst[0][1] if worst else math.nan,
                         "worst_cost": worst[2] if worst else math.nan,
                         "worst_entropy": worst[3] if worst else math.nan,
                         "jensen_ok": jensen_ok, "solver_converged": bool(converged)},
                 witness={"nu": worst[1]} if worst else None,
                 params={"direction": direction, "a": a, "cost": theta.name, "atoms": mu.x.size})
    rep.tables["samples"] = (["nu", "weak_cost", "entropy", "ratio", "classical", "ok", "jensen_ok"], rows)
    return rep
