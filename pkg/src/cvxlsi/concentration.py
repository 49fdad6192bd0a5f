"""Monte Carlo tails of convex and concave 1-Lipschitz functions of product samples.

For ``X`` drawn from ``mu^N`` and ``phi`` in a small zoo of certified convex
(or concave) 1-Lipschitz functions, estimates ``P(phi(X) - med >= t)`` and
``P(med - phi(X) >= t)`` around the sample median and fits a sub-Gaussian
envelope ``B exp(-t^2/A)`` to the two-sided tail.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .measures import Measure1D
from .report import FAIL, PASS, Report

ZOO = ("coordinate", "mean-direction", "norm", "neg-norm", "max-affine", "constant")


@dataclass
class ZooFunction:
    """``phi`` with its shape and a Lipschitz certificate."""

    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    shape: str  # "convex" or "concave"
    lipschitz: float

    def certify(self, tol: float = 1e-12) -> None:
        if self.lipschitz > 1.0 + tol:
            raise ValueError(f"{self.name}: Lipschitz certificate {self.lipschitz:g} exceeds 1")


def max_affine(slopes, offsets, name: str = "max-affine") -> ZooFunction:
    """``x -> max_k <a_k, x> + c_k``; Lipschitz constant ``max_k |a_k|``."""
    A = np.atleast_2d(np.asarray(slopes, dtype=float))
    c = np.asarray(offsets, dtype=float)
    lip = float(np.max(np.linalg.norm(A, axis=1)))
    return ZooFunction(name, lambda X: np.max(X @ A.T + c, axis=1), "convex", lip)


def zoo_function(name: str, N: int, seed: int = 0) -> ZooFunction:
    if name == "coordinate":
        return ZooFunction(name, lambda X: X[:, 0], "convex", 1.0)
    if name == "mean-direction":
        u = np.full(N, 1.0 / math.sqrt(N))
        return ZooFunction(name, lambda X: X @ u, "convex", float(np.linalg.norm(u)))
    if name == "norm":
        return ZooFunction(name, lambda X: np.linalg.norm(X, axis=1), "convex", 1.0)
    if name == "neg-norm":
        return ZooFunction(name, lambda X: -np.linalg.norm(X, axis=1), "concave", 1.0)
    if name == "max-affine":
        rng = np.random.default_rng(seed)
        A = rng.normal(size=(8, N))
        A /= np.maximum(np.linalg.norm(A, axis=1, keepdims=True), 1.0)
        return max_affine(A, rng.normal(size=8) * 0.5)
    if name == "constant":
        return ZooFunction(name, lambda X: np.zeros(X.shape[0]), "convex", 0.0)
    raise ValueError(f"unknown zoo function {name!r}; choose from {ZOO}")


@dataclass
class ExperimentConfig:
    base: Measure1D
    N: int = 1
    M: int = 10 ** 5
    zoo: str = "norm"
    t_grid: np.ndarray = field(default_factory=lambda: np.linspace(0.1, 4.0, 40))
    seed: int = 0
    replicas: int = 8
    workers: int = 4
    z: float = 3.0  # half-widths are z binomial standard errors
    c_chain: float | None = None  # log-Sobolev constant recorded alongside the fit

    def __post_init__(self):
        if self.seed is None:
            raise ValueError("a seed is required")
        if self.N < 1 or self.M < 1:
            raise ValueError("N and M must be positive")
        if self.M < 10 ** 4:
            raise ValueError("M >= 10^4 required for tail estimates down to 1e-3")
        self.t_grid = np.asarray(self.t_grid, dtype=float)
        if np.any(self.t_grid <= 0) or np.any(np.diff(self.t_grid) <= 0):
            raise ValueError("t grid must be positive and increasing")


@dataclass
class TailData:
    t: np.ndarray
    upper: np.ndarray
    lower: np.ndarray
    two_sided: np.ndarray
    halfwidth: np.ndarray
    M: int
    median: float = 0.0
    function: str = ""


@dataclass
class TailFit:
    A: float
    B: float
    residual: float
    t: np.ndarray
    tail: np.ndarray
    halfwidth: np.ndarray
    reliable: np.ndarray
    envelope_ok: bool
    degenerate: bool = False
    upper_ok: bool = True
    lower_ok: bool = True

    def envelope(self, t):
        t = np.asarray(t, dtype=float)
        if self.degenerate:
            return np.zeros_like(t)
        return self.B * np.exp(-t * t / self.A)


def _replica(cfg: ExperimentConfig, phi: ZooFunction, seq: np.random.SeedSequence, m: int):
    rng = np.random.default_rng(seq)
    X = np.asarray(cfg.base.sample(rng, (m, cfg.N)), dtype=float).reshape(m, cfg.N)
    return np.asarray(phi.fn(X), dtype=float)


def simulate_values(cfg: ExperimentConfig) -> np.ndarray:
    """``phi(X)`` for ``M`` samples, concatenated in replica order."""
    phi = zoo_function(cfg.zoo, cfg.N, cfg.seed)
    phi.certify()
    seqs = np.random.SeedSequence(cfg.seed).spawn(cfg.replicas)
    sizes = [cfg.M // cfg.replicas + (1 if i < cfg.M % cfg.replicas else 0) for i in range(cfg.replicas)]
    with ThreadPoolExecutor(max_workers=max(1, cfg.workers)) as ex:
        parts = list(ex.map(lambda a: _replica(cfg, phi, *a), zip(seqs, sizes)))
    return np.concatenate(parts)


def _tails(v_sorted: np.ndarray, med: float, t: np.ndarray):
    M = v_sorted.size
    upper = (M - np.searchsorted(v_sorted, med + t, side="left")) / M
    lower = np.searchsorted(v_sorted, med - t, side="right") / M
    return upper, lower


def tails_from_values(values, t_grid, z: float = 3.0, function: str = "") -> TailData:
    v = np.sort(np.asarray(values, dtype=float))
    M = v.size
    t = np.asarray(t_grid, dtype=float)
    med = float(np.median(v))
    upper, lower = _tails(v, med, t)
    two = upper + lower
    hw = z * np.sqrt(two * (1 - two) / M)
    # sample-median uncertainty: order statistics M/2 +- z sqrt(M)/2
    k = z * math.sqrt(M) / 2
    lo_med = v[max(0, int(math.floor(M / 2 - k)))]
    hi_med = v[min(M - 1, int(math.ceil(M / 2 + k)))]
    shift = []
    for m in (lo_med, hi_med):
        u, l = _tails(v, m, t[:1])
        shift.append(abs(u[0] + l[0] - two[0]))
    hw[0] += max(shift)
    return TailData(t, upper, lower, two, hw, M, med, function)


def simulate_tails(cfg: ExperimentConfig) -> TailData:
    return tails_from_values(simulate_values(cfg), cfg.t_grid, cfg.z, cfg.zoo)


def fit_subgaussian(tails, p=None, M: int | None = None, halfwidth=None,
                    min_points: int = 4) -> TailFit:
    """Fit ``log p ~ log B - t^2/A`` on the reliable range ``p >= 10/M``.

    ``A`` comes from the least-squares slope against ``t^2``; ``B`` is then
    the smallest value ``>= 1`` whose envelope dominates every reliable point.
    The envelope verdict checks all points against envelope plus half-width.
    Accepts a :class:`TailData` or raw arrays ``(t, p)``.
    """
    upper = lower = None
    if isinstance(tails, TailData):
        t, p, M, hw = tails.t, tails.two_sided, tails.M, tails.halfwidth
        upper, lower = tails.upper, tails.lower
    else:
        t = np.asarray(tails, dtype=float)
        p = np.asarray(p, dtype=float)
        hw = np.zeros_like(p) if halfwidth is None else np.asarray(halfwidth, dtype=float)
    floor = 10.0 / M if M else 0.0
    reliable = (p > 0) & (p >= floor)
    if reliable.sum() < min_points:
        return TailFit(0.0, 0.0, math.nan, t, p, hw, reliable, envelope_ok=bool(np.all(p <= hw)),
                       degenerate=True)
    tt, lp = t[reliable] ** 2, np.log(p[reliable])
    slope, icpt = np.polyfit(tt, lp, 1)
    if not slope < 0:
        return TailFit(0.0, 0.0, math.nan, t, p, hw, reliable, envelope_ok=False, degenerate=True)
    A = -1.0 / slope
    resid = float(np.sqrt(np.mean((lp - (icpt + slope * tt)) ** 2)))
    B = max(1.0, float(np.max(p[reliable] * np.exp(t[reliable] ** 2 / A))))
    # B makes the envelope touch a data point; allow for the rounding there
    env = B * np.exp(-t * t / A) * (1 + 1e-12)
    ok = bool(np.all(p <= env + hw))
    fit = TailFit(A, B, resid, t, p, hw, reliable, envelope_ok=ok)
    if upper is not None:
        fit.upper_ok = bool(np.all(upper <= env + hw))
        fit.lower_ok = bool(np.all(lower <= env + hw))
    return fit


def concentration_report(cfg: ExperimentConfig) -> tuple[Report, TailData, TailFit]:
    tails = simulate_tails(cfg)
    fit = fit_subgaussian(tails)
    ok = fit.envelope_ok and fit.upper_ok and fit.lower_ok
    rep = Report("concentration", "P(|phi - Med| >= t) <= B exp(-t^2/A), phi convex or concave 1-Lipschitz",
                 PASS if ok else FAIL,
                 values={"A": fit.A, "B": fit.B, "fit_residual": fit.residual,
                         "degenerate": fit.degenerate, "envelope_ok": fit.envelope_ok,
                         "upper_ok": fit.upper_ok, "lower_ok": fit.lower_ok, "median": tails.median},
                 params={"N": cfg.N, "M": cfg.M, "zoo": cfg.zoo, "seed": cfg.seed,
                         "base": repr(cfg.base), "c_chain": cfg.c_chain})
    rows = list(zip(tails.t, tails.lower, tails.upper, tails.two_sided, tails.halfwidth))
    rep.tables["tails"] = (["t", "lower", "upper", "two_sided", "halfwidth"], rows)
    if fit.degenerate:
        rep.notes.append("degenerate fit: fewer than 4 reliable nonzero tail points; A reported as 0")
    return rep, tails, fit
