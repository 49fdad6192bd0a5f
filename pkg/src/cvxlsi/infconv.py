"""Infimum convolutions, the Hopf-Lax residual and the bounded-support envelope.

``Q_t f(x) = inf_y f(y) + t theta(|x - y| / t)`` is evaluated by one of
three engines:

``exhaustive``  minimum over the input nodes, O(n m), always available;
``envelope``    lower envelope of translated parabolas, O(n + m), for
                quadratic costs;
``exact``       per-piece minimization for piecewise-linear inputs (or a
                bracketed golden-section search when a closed-form ``f``
                is supplied), independent of the input node set.

An infimum attained on the edge of the input nodes while the extension of
``f`` would go lower is an error rather than a silent clamp.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .costs import CostFunction, transform
from .errors import PaddingError
from .measures import Atoms, Measure1D, median_support
from .report import FAIL, PASS, Report

_GOLD = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class GridFunction:
    """A real function sampled on sorted nodes.

    Between nodes the function is linear.  Beyond the hull it is either
    extended linearly with the outermost chord slopes (``extension="linear"``)
    or set to ``+inf``.  An optional closed-form ``func`` (and ``deriv``)
    overrides interpolation wherever it is supplied.
    """

    nodes: np.ndarray
    values: np.ndarray
    extension: str = "linear"
    lipschitz: Optional[float] = None
    func: Optional[Callable] = field(default=None, repr=False)
    deriv: Optional[Callable] = field(default=None, repr=False)
    kinks: np.ndarray = field(default_factory=lambda: np.empty(0))
    label: str = ""

    def __post_init__(self):
        x = np.asarray(self.nodes, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if x.ndim != 1 or x.shape != v.shape or x.size < 2:
            raise ValueError("need at least two nodes with matching values")
        if np.any(np.diff(x) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if self.extension not in ("linear", "inf"):
            raise ValueError("extension must be 'linear' or 'inf'")
        object.__setattr__(self, "nodes", x)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "kinks", np.asarray(self.kinks, dtype=float))
        if self.lipschitz is not None:
            if self.lipschitz < 0:
                raise ValueError("Lipschitz bound must be nonnegative")
            if np.max(np.abs(self.slopes)) > self.lipschitz * (1 + 1e-12) + 1e-12:
                raise ValueError("chord slopes exceed the declared Lipschitz bound")

    # -- constructors ------------------------------------------------------
    @classmethod
    def piecewise_linear(cls, breaks, slopes, value_at_first: float = 0.0,
                         span: float | None = None, label: str = "") -> "GridFunction":
        """Continuous piecewise-linear function with kinks at ``breaks``.

        ``slopes`` has one more entry than ``breaks``: the slope left of the
        first break, between consecutive breaks, and right of the last.
        Outer nodes are placed ``span`` away from the extreme breaks.
        """
        b = np.asarray(breaks, dtype=float)
        s = np.asarray(slopes, dtype=float)
        if s.size != b.size + 1:
            raise ValueError("need len(slopes) == len(breaks) + 1")
        if b.size == 0:
            span = 1.0 if span is None else span
            nodes = np.array([-span, span])
            vals = value_at_first + s[0] * (nodes - nodes[0])
            return cls(nodes, vals, lipschitz=float(abs(s[0])), label=label)
        span = max(1.0, float(b[-1] - b[0])) if span is None else span
        nodes = np.concatenate([[b[0] - span], b, [b[-1] + span]])
        vals = np.empty_like(nodes)
        vals[1] = value_at_first
        vals[0] = value_at_first - s[0] * span
        for i in range(1, b.size):
            vals[i + 1] = vals[i] + s[i] * (b[i] - b[i - 1])
        vals[-1] = vals[-2] + s[-1] * span
        return cls(nodes, vals, lipschitz=float(np.max(np.abs(s))), kinks=b, label=label)

    @classmethod
    def from_callable(cls, f: Callable, nodes, deriv: Callable | None = None,
                      lipschitz: float | None = None, label: str = "") -> "GridFunction":
        nodes = np.asarray(nodes, dtype=float)
        return cls(nodes, np.asarray(f(nodes), dtype=float), func=f, deriv=deriv,
                   lipschitz=lipschitz, label=label)

    @classmethod
    def constant(cls, value: float, span: float = 1.0) -> "GridFunction":
        return cls(np.array([-span, span]), np.array([value, value]), lipschitz=0.0, label="constant")

    # -- queries -----------------------------------------------------------
    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / np.diff(self.nodes)

    @property
    def convex(self) -> bool:
        s = self.slopes
        return bool(np.all(np.diff(s) >= -1e-12 * np.maximum(1.0, np.abs(s[1:]))))

    @property
    def lip(self) -> float:
        if self.lipschitz is not None:
            return float(self.lipschitz)
        return float(np.max(np.abs(self.slopes)))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.func is not None:
            return np.asarray(self.func(x), dtype=float)[()]
        out = np.interp(x, self.nodes, self.values)
        lo, hi = x < self.nodes[0], x > self.nodes[-1]
        if self.extension == "linear":
            s = self.slopes
            out = np.where(lo, self.values[0] + s[0] * (x - self.nodes[0]), out)
            out = np.where(hi, self.values[-1] + s[-1] * (x - self.nodes[-1]), out)
        else:
            out = np.where(lo | hi, np.inf, out)
        return out[()]

    def derivative(self, x, side: str = "right"):
        """One-sided derivative; the right derivative is the default."""
        x = np.asarray(x, dtype=float)
        if self.deriv is not None:
            return np.asarray(self.deriv(x), dtype=float)[()]
        s = self.slopes
        if side == "right":
            k = np.searchsorted(self.nodes, x, side="right") - 1
        else:
            k = np.searchsorted(self.nodes, x, side="left") - 1
        return s[np.clip(k, 0, s.size - 1)][()]

    def shifted(self, c: float) -> "GridFunction":
        """``x -> f(x - c)``."""
        func = None if self.func is None else (lambda x, f=self.func: f(x - c))
        deriv = None if self.deriv is None else (lambda x, d=self.deriv: d(x - c))
        return replace(self, nodes=self.nodes + c, func=func, deriv=deriv, kinks=self.kinks + c)

    def plus(self, c: float) -> "GridFunction":
        func = None if self.func is None else (lambda x, f=self.func: f(x) + c)
        return replace(self, values=self.values + c, func=func)


def _cost(theta: CostFunction, t: float) -> CostFunction:
    """``d -> t theta(|d| / t)`` as a cost function."""
    if not t > 0:
        raise ValueError("t must be positive")
    return transform(theta, outer=t, inner=1.0 / t)


def padding_radius(f: GridFunction, theta: CostFunction, t: float = 1.0) -> float:
    """Distance from ``x`` within which the infimum defining ``Q_t f(x)`` lies."""
    return float(_cost(theta, t).slope_radius(f.lip))


# ---------------------------------------------------------------------------
# engines


def _edge_guard(f: GridFunction, c: CostFunction, x, y_edge, best, side: str):
    """Raise if moving past the outer node along the extension lowers the objective."""
    if f.extension == "inf":
        return
    h = max(1e-9, 1e-6 * float(f.nodes[-1] - f.nodes[0]))
    y_out = y_edge - h if side == "left" else y_edge + h
    probe = f(y_out) + c(x - y_out)
    if np.any(probe < best - 1e-12 * np.maximum(1.0, np.abs(best))):
        bad = x[np.argmax(best - probe)]
        raise PaddingError(f"infimum at x={bad:g} is attained at the {side} edge of the nodes; "
                           f"widen the input grid")


def _exhaustive(f: GridFunction, c: CostFunction, x: np.ndarray, chunk: int = 256):
    y = f.nodes
    fy = f.values if f.func is None else np.asarray(f.func(y), dtype=float)
    out = np.empty_like(x)
    arg = np.empty(x.size, dtype=np.int64)
    for start in range(0, x.size, chunk):
        xs = x[start:start + chunk]
        obj = fy[None, :] + c(xs[:, None] - y[None, :])
        j = np.argmin(obj, axis=1)
        arg[start:start + chunk] = j
        out[start:start + chunk] = obj[np.arange(xs.size), j]
    for side, idx in (("left", 0), ("right", y.size - 1)):
        hit = arg == idx
        if hit.any():
            _edge_guard(f, c, x[hit], y[idx], out[hit], side)
    return out


def _envelope(f: GridFunction, k: float, x: np.ndarray):
    """Lower envelope of ``f_i + k (x - y_i)^2`` evaluated at sorted ``x``."""
    y = f.nodes
    fy = f.values if f.func is None else np.asarray(f.func(y), dtype=float)
    n = y.size
    g = fy + k * y * y
    v = np.zeros(n, dtype=np.int64)      # parabola indices on the envelope
    zb = np.empty(n + 1)                 # boundaries between them
    zb[0], zb[1] = -np.inf, np.inf
    top = 0
    for q in range(1, n):
        s = (g[q] - g[v[top]]) / (2.0 * k * (y[q] - y[v[top]]))
        while s <= zb[top]:
            top -= 1
            s = (g[q] - g[v[top]]) / (2.0 * k * (y[q] - y[v[top]]))
        top += 1
        v[top] = q
        zb[top] = s
        zb[top + 1] = np.inf
    m = top + 1
    order = np.argsort(x, kind="stable")
    xs = x[order]
    seg = np.searchsorted(zb[1:m], xs, side="left")
    idx = v[seg]
    vals = fy[idx] + k * (xs - y[idx]) ** 2
    out = np.empty_like(x)
    out[order] = vals
    arg = np.empty(x.size, dtype=np.int64)
    arg[order] = idx
    return out, arg


def _exact_pl(f: GridFunction, c: CostFunction, x: np.ndarray, chunk: int = 512):
    """Exact minimum for a convex piecewise-linear ``f``.

    On a piece with slope ``s`` the objective ``f(y) + c(x - y)`` is convex
    and stationary where ``c'(x - y) = s``; the piece minimum is at that
    point projected onto the piece (and onto the finiteness window of ``c``).
    """
    y = f.nodes
    s = f.slopes
    if f.extension == "linear":
        lo_end = np.concatenate([[-np.inf], y[:-1], [y[-1]]])
        hi_end = np.concatenate([[y[0]], y[1:], [np.inf]])
        slope = np.concatenate([[s[0]], s, [s[-1]]])
    else:
        lo_end, hi_end, slope = y[:-1], y[1:], s
    r = np.asarray(c.slope_radius(slope), dtype=float)
    disp = np.sign(slope) * r        # x - y at the stationary point
    R = c.radius
    out = np.empty_like(x)
    for start in range(0, x.size, chunk):
        xs = x[start:start + chunk, None]
        cand = xs - disp[None, :]
        a = np.maximum(lo_end[None, :], xs - R)
        b = np.minimum(hi_end[None, :], xs + R)
        ok = a <= b
        cand = np.clip(cand, a, b)
        with np.errstate(invalid="ignore"):
            obj = f(cand) + c(xs - cand)
        obj = np.where(ok, obj, np.inf)
        out[start:start + chunk] = np.min(obj, axis=1)
    return out


def _golden(f: GridFunction, c: CostFunction, x: np.ndarray, iters: int = 120):
    """Bracketed golden-section search for smooth convex ``f``."""
    r = float(c.slope_radius(f.lip))
    a = x - r
    b = x + r
    if f.extension == "inf":
        a = np.maximum(a, f.nodes[0])
        b = np.minimum(b, f.nodes[-1])

    def obj(yv):
        return f(yv) + c(x - yv)

    p = b - _GOLD * (b - a)
    q = a + _GOLD * (b - a)
    fp, fq = obj(p), obj(q)
    for _ in range(iters):
        left = fp <= fq
        b = np.where(left, q, b)
        a = np.where(left, a, p)
        q_new = np.where(left, p, a + _GOLD * (b - a))
        p_new = np.where(left, b - _GOLD * (b - a), q)
        fq_new = np.where(left, fp, np.nan)
        fp_new = np.where(left, np.nan, fq)
        p, q = p_new, q_new
        need_p = np.isnan(fp_new)
        need_q = np.isnan(fq_new)
        fp = np.where(need_p, obj(p), fp_new)
        fq = np.where(need_q, obj(q), fq_new)
        if np.all(b - a <= 1e-15 * np.maximum(1.0, np.abs(x))):
            break
    ends = np.minimum(obj(a), obj(b))
    return np.minimum(np.minimum(fp, fq), ends)


def inf_convolution(f: GridFunction, theta: CostFunction, t: float, out_nodes,
                    engine: str = "auto") -> GridFunction:
    """``Q_t f(x) = inf_y f(y) + t theta(|x - y| / t)`` at ``out_nodes``.

    ``engine`` is ``exhaustive``, ``envelope`` (quadratic costs only),
    ``exact`` or ``auto`` (exact for piecewise-linear or closed-form
    inputs when ``f`` is convex, envelope for quadratic costs otherwise,
    exhaustive as the fallback).
    """
    c = _cost(theta, t)
    x = np.asarray(out_nodes, dtype=float)
    if engine == "auto":
        if f.convex and (f.func is None or f.lipschitz is not None):
            engine = "exact"
        elif c.quad_coef is not None:
            engine = "envelope"
        else:
            engine = "exhaustive"
    if engine == "exhaustive":
        vals = _exhaustive(f, c, x)
    elif engine == "envelope":
        if c.quad_coef is None:
            raise ValueError("the envelope engine needs a quadratic cost")
        vals, arg = _envelope(f, c.quad_coef, x)
        for side, idx in (("left", 0), ("right", f.nodes.size - 1)):
            hit = arg == idx
            if hit.any():
                _edge_guard(f, c, x[hit], f.nodes[idx], vals[hit], side)
    elif engine == "exact":
        if not f.convex:
            raise ValueError("the exact engine needs a convex input")
        vals = _golden(f, c, x) if f.func is not None else _exact_pl(f, c, x)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    order = np.argsort(x)
    xs, vs = x[order], vals[order]
    keep = np.concatenate([[True], np.diff(xs) > 0])
    return GridFunction(xs[keep], vs[keep], extension=f.extension, kinks=f.kinks,
                        label=f"Q_{t:g} {f.label}".strip())


def q_values(f: GridFunction, theta: CostFunction, t: float, x, engine: str = "auto") -> np.ndarray:
    """Values of ``Q_t f`` at ``x`` in the given order."""
    x = np.asarray(x, dtype=float)
    c = _cost(theta, t)
    if engine == "auto":
        engine = "exact" if f.convex else ("envelope" if c.quad_coef is not None else "exhaustive")
    if engine == "exact":
        return _golden(f, c, x) if f.func is not None else _exact_pl(f, c, x)
    if engine == "envelope":
        return _envelope(f, c.quad_coef, x)[0]
    return _exhaustive(f, c, x)


# ---------------------------------------------------------------------------
# R^lambda and the Hopf-Lax residual


def r_lambda(f: GridFunction, Hstar: CostFunction, a: float, lam: float, x,
             check_gap: bool = False):
    """``R f(x) = inf_y f(y) + lam H*(a (x - y))``.

    With ``check_gap`` the convexity bound ``f - R f <= lam H(f'/(a lam))``
    is evaluated at ``x`` and a :class:`Report` is returned alongside the
    values.  Any subgradient gives a valid bound, so the smaller of the two
    one-sided bounds (zero when the subdifferential contains 0) is used.
    """
    if not f.convex:
        raise ValueError("R^lambda needs a convex input")
    if not 0 < lam < 1:
        raise ValueError("lambda must lie in (0, 1)")
    if not a > 0:
        raise ValueError("a must be positive")
    c = transform(Hstar, outer=lam, inner=a)
    x = np.asarray(x, dtype=float)
    vals = q_values(f, c, 1.0, x, engine="exact")
    if not check_gap:
        return vals
    H = Hstar.dual()
    dl = np.asarray(f.derivative(x, side="left"), dtype=float)
    dr = np.asarray(f.derivative(x, side="right"), dtype=float)
    bl = lam * H(dl / (a * lam))
    br = lam * H(dr / (a * lam))
    bound = np.where((dl <= 0) & (dr >= 0), 0.0, np.minimum(bl, br))
    gap = f(x) - vals
    excess = gap - bound
    tol = 1e-9 * np.maximum(1.0, np.abs(bound))
    ok = bool(np.all(excess <= tol))
    j = int(np.argmax(excess))
    rep = Report("r-lambda-gap", "f(x) - R f(x) <= lam H(f'(x)/(a lam))", PASS if ok else FAIL,
                 values={"max_excess": float(excess[j]), "max_gap": float(np.max(gap))},
                 witness=None if ok else {"x": float(x[j]), "gap": float(gap[j]), "bound": float(bound[j])},
                 params={"a": a, "lambda": lam})
    return vals, rep


def hopf_lax_residual(f: GridFunction, H: CostFunction, t_grid, x_grid,
                      dt: float | None = None, dx: float | None = None,
                      exclude: float | None = None) -> Report:
    """Centered-difference residual of ``d_t Q + H(d_x Q)`` for ``Q_t f``.

    ``Q_t`` uses the cost ``t H*(|.|/t)``.  Points whose difference stencil
    straddles a kink of ``f`` (within ``exclude``, default ``dx``) are
    excluded from the summary statistics but kept in the table.
    """
    t = np.asarray(t_grid, dtype=float)
    x = np.asarray(x_grid, dtype=float)
    if t.size < 1 or x.size < 1:
        raise ValueError("empty grid")
    if dx is None:
        if x.size < 2:
            raise ValueError("grid too coarse to form differences")
        dx = float(np.min(np.diff(x)))
    if dt is None:
        dt = dx
    if np.any(t - dt <= 0):
        raise ValueError("time grid must stay away from 0 by at least dt")
    theta = H.theta
    rows = []
    res = np.empty((t.size, x.size))
    for i, ti in enumerate(t):
        qp = q_values(f, theta, ti + dt, x)
        qm = q_values(f, theta, ti - dt, x)
        qr = q_values(f, theta, ti, x + dx)
        ql = q_values(f, theta, ti, x - dx)
        qt = (qp - qm) / (2 * dt)
        qx = (qr - ql) / (2 * dx)
        res[i] = qt + H(qx)
    excl = dx if exclude is None else exclude
    mask = np.ones_like(res, dtype=bool)
    if f.kinks.size:
        near = np.min(np.abs(x[:, None] - f.kinks[None, :]), axis=1) <= excl + 1e-15
        mask[:, near] = False
    vals = np.abs(res[mask]) if mask.any() else np.array([np.nan])
    for i, ti in enumerate(t):
        for j, xj in enumerate(x):
            rows.append((ti, xj, res[i, j], int(mask[i, j])))
    rep = Report("hopf-lax", "d_t Q_t f + H(d_x Q_t f) = 0", PASS,
                 values={"max_abs_residual": float(np.max(vals)),
                         "mean_abs_residual": float(np.mean(vals)),
                         "max_abs_residual_all": float(np.max(np.abs(res))),
                         "excluded_points": int(np.count_nonzero(~mask))},
                 params={"dt": dt, "dx": dx, "H": H.name})
    rep.tables["residual"] = (["t", "x", "residual", "kept"], rows)
    rep.data["residual"] = res
    rep.data["mask"] = mask
    return rep


# ---------------------------------------------------------------------------
# bounded support


def maurey_k(u):
    """``(u - u^2)`` on ``[0, 1/2)`` and ``1/4`` from ``1/2`` on."""
    u = np.asarray(u, dtype=float)
    return np.where(u < 0.5, u - u * u, 0.25)[()]


def maurey_envelope_gap(u_grid=None) -> tuple[float, float]:
    """``max_u e^{k(u)} - (2 - e^{-u})`` and its argmax over the grid."""
    u = np.linspace(0.0, 5.0, 10_000) if u_grid is None else np.asarray(u_grid, dtype=float)
    gap = np.exp(maurey_k(u)) - (2.0 - np.exp(-u))
    j = int(np.argmax(gap))
    return float(gap[j]), float(u[j])


def _support_points(mu: Measure1D, n: int = 2001) -> tuple[np.ndarray, np.ndarray]:
    """Evaluation points on the support with quadrature weights."""
    if isinstance(mu, Atoms):
        return mu.x, mu.w
    s, t = mu.support()
    if not (math.isfinite(s) and math.isfinite(t)):
        raise ValueError("bounded support required")
    nodes, weights = np.polynomial.legendre.leggauss(64)
    edges = np.linspace(s, t, n // 64 + 2)
    xs, ws = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        half, mid = 0.5 * (hi - lo), 0.5 * (hi + lo)
        xq = mid + half * nodes
        xs.append(xq)
        ws.append(half * weights * mu.pdf(xq))
    x = np.concatenate(xs)
    w = np.concatenate(ws)
    return x, w / w.sum()


def maurey_bound_check(phi: GridFunction, D: float, mu: Measure1D, u_grid=None) -> Report:
    """Pointwise chain behind the bounded-support inequality.

    With ``phi`` shifted so that its infimum over the support is 0, checks
    ``Q_1 phi(x) <= k(phi(x))`` on the support (cost ``theta_D``), the
    envelope ``e^{k(u)} <= 2 - e^{-u}``, and the integrated chain
    ``int e^{Q phi} <= int e^{k(phi)} <= 2 - int e^{-phi} <= 1 / int e^{-phi}``.
    """
    from .costs import theta_D

    _, s_mu, t_mu = median_support(mu)
    diam = t_mu - s_mu
    if diam > D * (1 + 1e-12):
        raise ValueError(f"support diameter {diam:g} exceeds D = {D:g}")
    xs, ws = _support_points(mu)
    phi_vals = np.asarray(phi(xs), dtype=float)
    if isinstance(mu, Atoms):
        floor = float(np.min(phi_vals))
    else:
        dense = np.linspace(s_mu, t_mu, 20001)
        floor = float(min(np.min(phi(dense)), np.min(phi_vals)))
    f = phi.plus(-floor)
    u = phi_vals - floor
    q = q_values(f, theta_D(D), 1.0, xs, engine="exact")
    k = maurey_k(u)
    point_excess = q - k
    env_gap, env_arg = maurey_envelope_gap(u_grid)
    i1 = float(np.dot(ws, np.exp(q)))
    i2 = float(np.dot(ws, np.exp(k)))
    im = float(np.dot(ws, np.exp(-u)))
    chain = [i1, i2, 2.0 - im, 1.0 / im]
    tol = 1e-10
    ok_point = bool(np.max(point_excess) <= tol)
    ok_env = env_gap <= 0.0
    ok_chain = all(chain[i] <= chain[i + 1] + tol for i in range(3))
    j = int(np.argmax(point_excess))
    ok = ok_point and ok_env and ok_chain
    return Report("maurey", "Q_1 phi <= k(phi) on supp mu and e^k(u) <= 2 - e^-u", PASS if ok else FAIL,
                  values={"max_pointwise_excess": float(point_excess[j]),
                          "envelope_gap": env_gap, "envelope_argmax": env_arg,
                          "int_exp_Q": i1, "int_exp_k": i2, "two_minus_int_exp_minus": chain[2],
                          "inverse_int_exp_minus": chain[3], "product": i1 * im},
                  witness=None if ok_point else {"x": float(xs[j]), "phi": float(u[j])},
                  params={"D": D, "diameter": diam})
