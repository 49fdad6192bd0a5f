"""Probability measures on the real line.

Three representations share one interface:

* :class:`Atoms` -- finitely many weighted points, every query is exact;
* :class:`GridCdf` -- a piecewise-linear CDF on sorted nodes (piecewise
  constant density);
* :class:`ClosedForm` -- the symmetric exponential, Gaussian and uniform
  families, backed by :mod:`scipy.stats`.

The generalized inverse follows the ``inf {y : F(y) >= t}`` convention, so it
is left-continuous and jumps across gaps of the support.  Upper quantiles
``F^{-1}(1 - q)`` are computed from the upper tail directly, which keeps the
transport map finite and accurate far in the tails.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np
from scipy import special, stats

from .errors import DivergenceError

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)

# integrand magnitude below which an unbounded tail is considered exhausted
_TAIL_EPS = 1e-22
_MAX_REACH = 1e7


@dataclass(frozen=True)
class Tolerance:
    abs: float = 1e-12
    rel: float = 1e-7
    grid: int = 4001

    def __post_init__(self):
        if self.abs < 0 or self.rel < 0 or self.abs + self.rel <= 0:
            raise ValueError("tolerance needs abs >= 0, rel >= 0 and abs + rel > 0")
        if self.grid < 1:
            raise ValueError("grid resolution must be positive")

    def leq(self, lhs: float, rhs: float) -> bool:
        """``lhs <= rhs`` up to the relative and absolute slack."""
        return lhs <= rhs + self.abs + self.rel * max(abs(lhs), abs(rhs))


class Measure1D:
    """Common interface.  Subclasses implement the primitive queries."""

    is_atomic = False

    # -- distribution function -------------------------------------------
    def cdf(self, x):
        """``mu((-inf, x])``."""
        raise NotImplementedError

    def cdf_open(self, x):
        """``mu((-inf, x))``."""
        return self.cdf(x)

    def sf(self, x):
        """``mu((x, inf))``."""
        raise NotImplementedError

    def sf_closed(self, x):
        """``mu([x, inf))``."""
        return self.sf(x)

    def quantile(self, t):
        raise NotImplementedError

    def isf(self, q):
        """``F^{-1}(1 - q)`` evaluated without forming ``1 - q``."""
        raise NotImplementedError

    def support(self) -> tuple[float, float]:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        raise NotImplementedError

    def expect(self, fn: Callable, lo: float = -math.inf, hi: float = math.inf,
               breaks: Iterable[float] = ()) -> float:
        """Integral of ``fn`` over the open interval ``(lo, hi)``."""
        raise NotImplementedError

    def max_jump(self) -> float:
        """Largest jump of the quantile function (``Delta(0+)``)."""
        raise NotImplementedError

    def scaled(self, lam: float) -> "Measure1D":
        """Push-forward under ``x -> lam * x`` for ``lam > 0``."""
        raise NotImplementedError

    def exp_moment(self, s: float) -> float:
        raise NotImplementedError

    def mean(self) -> float:
        return self.expect(lambda x: x)

    def variance(self) -> float:
        m = self.mean()
        return self.expect(lambda x: (x - m) ** 2)


# ---------------------------------------------------------------------------
# atoms


class Atoms(Measure1D):
    is_atomic = True

    def __init__(self, positions, weights, atol: float = 1e-9):
        x = np.atleast_1d(np.asarray(positions, dtype=float))
        w = np.atleast_1d(np.asarray(weights, dtype=float))
        if x.shape != w.shape or x.ndim != 1 or x.size == 0:
            raise ValueError("positions and weights must be equal-length 1-d arrays")
        if not np.all(np.isfinite(x)):
            raise ValueError("atom positions must be finite")
        if np.any(w <= 0):
            raise ValueError("atom weights must be strictly positive")
        if np.any(np.diff(x) <= 0):
            raise ValueError("atom positions must be strictly increasing")
        total = math.fsum(w)
        if abs(total - 1.0) > atol:
            raise ValueError(f"atom weights sum to {total!r}, not 1")
        w = w / total
        self.x = x
        self.w = w
        n = x.size
        # lower[k] = mass of atoms 0..k-1, upper[k] = mass of atoms k..n-1
        self._lower = np.concatenate([[0.0], np.cumsum(w)])
        self._upper = np.concatenate([np.cumsum(w[::-1])[::-1], [0.0]])
        self._lower[n] = 1.0
        self._upper[0] = 1.0

    @classmethod
    def from_unsorted(cls, positions, weights, atol: float = 1e-9) -> "Atoms":
        """Sort, merge duplicate positions and drop zero weights."""
        x = np.asarray(positions, dtype=float).ravel()
        w = np.asarray(weights, dtype=float).ravel()
        keep = w > 0
        ux, inv = np.unique(x[keep], return_inverse=True)
        uw = np.bincount(inv, weights=w[keep])
        return cls(ux, uw, atol=atol)

    def __repr__(self):
        return f"Atoms(n={self.x.size})"

    def cdf(self, x):
        return self._lower[np.searchsorted(self.x, x, side="right")]

    def cdf_open(self, x):
        return self._lower[np.searchsorted(self.x, x, side="left")]

    def sf(self, x):
        return self._upper[np.searchsorted(self.x, x, side="right")]

    def sf_closed(self, x):
        return self._upper[np.searchsorted(self.x, x, side="left")]

    def quantile(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self._lower[1:], t, side="left")
        idx = np.minimum(idx, self.x.size - 1)
        out = self.x[idx]
        return np.where(t <= 0, -np.inf, out)[()]

    def isf(self, q):
        q = np.asarray(q, dtype=float)
        idx = np.searchsorted(-self._upper[1:], -q, side="left")
        idx = np.minimum(idx, self.x.size - 1)
        return np.where(q >= 1, -np.inf, self.x[idx])[()]

    def support(self):
        return float(self.x[0]), float(self.x[-1])

    def sample(self, rng, size):
        return rng.choice(self.x, size=size, p=self.w)

    def expect(self, fn, lo=-math.inf, hi=math.inf, breaks=()):
        mask = (self.x > lo) & (self.x < hi)
        if not mask.any():
            return 0.0
        vals = np.asarray(fn(self.x[mask]), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise DivergenceError("integrand is not finite on an atom")
        return float(np.dot(self.w[mask], np.broadcast_to(vals, self.x[mask].shape)))

    def max_jump(self):
        return float(np.max(np.diff(self.x))) if self.x.size > 1 else 0.0

    def scaled(self, lam):
        if lam <= 0:
            raise ValueError("scale must be positive")
        return Atoms(lam * self.x, self.w)

    def exp_moment(self, s):
        with np.errstate(over="ignore"):
            return float(np.exp(special.logsumexp(s * np.abs(self.x), b=self.w)))

    def mean(self):
        return float(np.dot(self.w, self.x))

    def variance(self):
        m = self.mean()
        return float(np.dot(self.w, (self.x - m) ** 2))

    def step_representation(self) -> tuple[np.ndarray, np.ndarray]:
        """Jump abscissae ``z`` and values ``v`` of the transport map.

        ``U(x) = v[i]`` for ``z[i-1] < x <= z[i]``, with ``z[-1] = +inf``.
        The levels ``F(x_i)`` are read from whichever tail is smaller so the
        abscissae stay accurate deep in both tails.
        """
        c = self._lower[1:]
        u = self._upper[1:]
        with np.errstate(divide="ignore"):
            z = np.where(c <= 0.5, np.log(2.0 * c), -np.log(2.0 * u))
        z[-1] = np.inf
        return z, self.x


def two_point(x0: float = 0.0, x1: float = 1.0, p0: float = 0.5) -> Atoms:
    return Atoms([x0, x1], [p0, 1.0 - p0])


def dirac(x: float) -> Atoms:
    return Atoms([x], [1.0])


# ---------------------------------------------------------------------------
# continuous representations


class _Continuous(Measure1D):
    """Shared quadrature for representations with a density."""

    # points where the density is not smooth; always used as panel edges
    _density_kinks: tuple = ()

    def pdf(self, x):
        raise NotImplementedError

    def _core(self) -> tuple[float, float]:
        lo, hi = float(self.quantile(1e-9)), float(self.isf(1e-9))
        return lo, hi

    def expect(self, fn, lo=-math.inf, hi=math.inf, breaks=()):
        s, t = self.support()
        a, b = max(lo, s), min(hi, t)
        if not a < b:
            return 0.0
        core_lo, core_hi = self._core()
        core_lo, core_hi = max(core_lo, a), min(core_hi, b)
        if not core_lo < core_hi:
            # interval lies entirely in a far tail
            core_lo = a if math.isfinite(a) else core_hi - 1.0
            core_hi = b if math.isfinite(b) else core_lo + 1.0
        width = (core_hi - core_lo) / 256
        edges = list(np.linspace(core_lo, core_hi, 257))

        def integrand(x):
            with np.errstate(over="ignore", invalid="ignore"):
                dens = self.pdf(x)
                val = np.asarray(fn(x), dtype=float) * dens
            return np.where(dens > 0, val, 0.0)

        edges = self._tail_edges(integrand, core_lo, a, -1, width) + edges
        edges = edges + self._tail_edges(integrand, core_hi, b, +1, width)
        extra = [p for p in (*breaks, *self._density_kinks) if a < p < b]
        edges = np.unique(np.concatenate([edges, extra]))
        left, right = edges[:-1], edges[1:]
        half = 0.5 * (right - left)
        mid = 0.5 * (right + left)
        nodes = mid[:, None] + half[:, None] * _GL_NODES[None, :]
        vals = integrand(nodes)
        if not np.all(np.isfinite(vals)):
            raise DivergenceError("integrand is not finite on the support")
        return float(np.sum(half * (vals @ _GL_WEIGHTS)))

    def _tail_edges(self, integrand, start, stop, direction, width):
        """Geometrically widening panels from ``start`` towards ``stop``."""
        if (stop - start) * direction <= 0:
            return []
        edges = []
        pos, step, prev = start, width, None
        while True:
            nxt = pos + direction * step
            if (stop - nxt) * direction <= 0:
                edges.append(stop)
                break
            edges.append(nxt)
            mag = abs(float(integrand(np.array([nxt]))[0]))
            if not math.isfinite(mag):
                raise DivergenceError(f"integrand overflows at x={nxt:g}")
            if mag < _TAIL_EPS and prev is not None and mag <= prev:
                break
            if abs(nxt - start) > _MAX_REACH:
                raise DivergenceError("integrand does not decay on an unbounded tail")
            prev = mag
            pos = nxt
            step *= 1.5
        return edges if direction > 0 else edges[::-1]


class ClosedForm(_Continuous):
    """Parametric families: ``symmetric-exponential``, ``gaussian``, ``uniform``."""

    FAMILIES = ("symmetric-exponential", "gaussian", "uniform")

    def __init__(self, tag: str, *params: float):
        params = tuple(float(p) for p in params)
        if tag == "symmetric-exponential":
            (scale,) = params or (1.0,)
            if scale <= 0:
                raise ValueError("scale must be positive")
            self.dist = stats.laplace(loc=0.0, scale=scale)
            params = (scale,)
            self._density_kinks = (0.0,)
        elif tag == "gaussian":
            mean, sd = params or (0.0, 1.0)
            if sd <= 0:
                raise ValueError("standard deviation must be positive")
            self.dist = stats.norm(loc=mean, scale=sd)
            params = (mean, sd)
        elif tag == "uniform":
            a, b = params or (0.0, 1.0)
            if not a < b:
                raise ValueError("uniform needs a < b")
            self.dist = stats.uniform(loc=a, scale=b - a)
            params = (a, b)
        else:
            raise ValueError(f"unknown family {tag!r}")
        self.tag = tag
        self.params = params

    def __repr__(self):
        return f"ClosedForm({self.tag!r}, {', '.join(map(repr, self.params))})"

    def cdf(self, x):
        return self.dist.cdf(x)

    def sf(self, x):
        return self.dist.sf(x)

    def pdf(self, x):
        return self.dist.pdf(x)

    def quantile(self, t):
        t = np.asarray(t, dtype=float)
        if np.any((t < 0) | (t > 1)):
            raise ValueError("quantile level outside [0, 1]")
        return self.dist.ppf(t)[()]

    def isf(self, q):
        return self.dist.isf(q)[()]

    def support(self):
        lo, hi = self.dist.support()
        return float(lo), float(hi)

    def sample(self, rng, size):
        return self.dist.rvs(size=size, random_state=rng)

    def max_jump(self):
        return 0.0

    def scaled(self, lam):
        if lam <= 0:
            raise ValueError("scale must be positive")
        if self.tag == "symmetric-exponential":
            return ClosedForm(self.tag, lam * self.params[0])
        return ClosedForm(self.tag, lam * self.params[0], lam * self.params[1])

    def mean(self):
        return float(self.dist.mean())

    def variance(self):
        return float(self.dist.var())

    def exp_moment(self, s):
        if self.tag == "symmetric-exponential":
            beta = self.params[0]
            return 1.0 / (1.0 - s * beta) if s * beta < 1 else math.inf
        if self.tag == "gaussian":
            m, sd = self.params
            log_terms = [s * m + 0.5 * (s * sd) ** 2 + special.log_ndtr(m / sd + s * sd),
                         -s * m + 0.5 * (s * sd) ** 2 + special.log_ndtr(-m / sd + s * sd)]
            return float(np.exp(special.logsumexp(log_terms)))
        a, b = self.params

        def prim(lo, hi, sign):
            # integral of exp(sign * s * x) over [lo, hi]
            if hi <= lo:
                return 0.0
            return (math.exp(sign * s * hi) - math.exp(sign * s * lo)) / (sign * s)

        total = prim(max(a, 0.0), b, 1.0) + prim(a, min(b, 0.0), -1.0)
        return total / (b - a)


class GridCdf(_Continuous):
    """Piecewise-linear CDF through ``(nodes[k], cdf[k])``."""

    def __init__(self, nodes, cdf_values, atol: float = 1e-12):
        x = np.asarray(nodes, dtype=float)
        F = np.asarray(cdf_values, dtype=float)
        if x.ndim != 1 or x.shape != F.shape or x.size < 2:
            raise ValueError("need at least two nodes with matching CDF values")
        if np.any(np.diff(x) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if np.any(np.diff(F) < -atol) or F.min() < -atol or F.max() > 1 + atol:
            raise ValueError("CDF values must be nondecreasing within [0, 1]")
        if abs(F[0]) > atol or abs(F[-1] - 1) > atol:
            raise ValueError("CDF must start at 0 and end at 1")
        F = np.clip(np.maximum.accumulate(F), 0.0, 1.0)
        F[0], F[-1] = 0.0, 1.0
        self.nodes = x
        self.F = F
        self._dens = np.diff(F) / np.diff(x)

    def __repr__(self):
        return f"GridCdf(n={self.nodes.size})"

    def cdf(self, x):
        return np.interp(x, self.nodes, self.F, left=0.0, right=1.0)

    def sf(self, x):
        return 1.0 - self.cdf(x)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        k = np.clip(np.searchsorted(self.nodes, x, side="right") - 1, 0, self._dens.size - 1)
        inside = (x >= self.nodes[0]) & (x < self.nodes[-1])
        return np.where(inside, self._dens[k], 0.0)

    def quantile(self, t):
        t = np.asarray(t, dtype=float)
        if np.any((t < 0) | (t > 1)):
            raise ValueError("quantile level outside [0, 1]")
        j = np.clip(np.searchsorted(self.F, t, side="left"), 1, self.F.size - 1)
        F0, F1 = self.F[j - 1], self.F[j]
        x0, x1 = self.nodes[j - 1], self.nodes[j]
        with np.errstate(invalid="ignore", divide="ignore"):
            frac = np.where(F1 > F0, (t - F0) / (F1 - F0), 0.0)
        out = x0 + np.clip(frac, 0.0, 1.0) * (x1 - x0)
        return np.where(t <= 0, -np.inf, out)[()]

    def isf(self, q):
        q = np.asarray(q, dtype=float)
        return self.quantile(np.clip(1.0 - q, 0.0, 1.0))

    def support(self):
        pos = np.nonzero(self._dens > 0)[0]
        return float(self.nodes[pos[0]]), float(self.nodes[pos[-1] + 1])

    def _core(self):
        return self.support()

    def expect(self, fn, lo=-math.inf, hi=math.inf, breaks=()):
        # Gauss-Legendre on every cell, split further at the requested breaks
        a, b = max(lo, self.nodes[0]), min(hi, self.nodes[-1])
        if not a < b:
            return 0.0
        inner = self.nodes[(self.nodes > a) & (self.nodes < b)]
        extra = [p for p in (*breaks, *self._density_kinks) if a < p < b]
        edges = np.unique(np.concatenate([[a], inner, extra, [b]]))
        left, right = edges[:-1], edges[1:]
        half = 0.5 * (right - left)
        mid = 0.5 * (right + left)
        dens = self.pdf(mid)
        keep = dens > 0
        nodes = mid[keep, None] + half[keep, None] * _GL_NODES[None, :]
        vals = np.asarray(fn(nodes), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise DivergenceError("integrand is not finite on the support")
        return float(np.sum(dens[keep] * half[keep] * (vals @ _GL_WEIGHTS)))

    def sample(self, rng, size):
        return self.quantile(rng.uniform(size=size))

    def max_jump(self):
        interior = (self.F[:-1] > 0) & (self.F[1:] < 1) & (self._dens == 0)
        if not interior.any():
            return 0.0
        # consecutive empty cells form a single gap
        widths = np.diff(self.nodes) * interior
        best = run = 0.0
        for wdt, empty in zip(widths, interior):
            run = run + wdt if empty else 0.0
            best = max(best, run)
        return float(best)

    def scaled(self, lam):
        if lam <= 0:
            raise ValueError("scale must be positive")
        return GridCdf(lam * self.nodes, self.F)

    def exp_moment(self, s):
        total = 0.0
        for x0, x1, d in zip(self.nodes[:-1], self.nodes[1:], self._dens):
            if d == 0:
                continue
            if x0 < 0 < x1:
                pieces = [(x0, 0.0), (0.0, x1)]
            else:
                pieces = [(x0, x1)]
            for lo, hi in pieces:
                sign = 1.0 if lo >= 0 else -1.0
                total += d * (math.exp(sign * s * hi) - math.exp(sign * s * lo)) / (sign * s)
        return total


def family(tag: str, *params: float) -> Measure1D:
    """Factory for the named families, including ``two-point``."""
    if tag == "two-point":
        if len(params) == 0:
            return two_point()
        if len(params) == 2:
            return two_point(*params)
        return two_point(*params[:3])
    return ClosedForm(tag, *params)


# ---------------------------------------------------------------------------
# module-level operations


def cdf_quantile(mu: Measure1D, mode: str, t: float) -> float:
    """Evaluate the CDF (``mode='cdf'``) or the generalized inverse."""
    if mode == "cdf":
        return float(mu.cdf(t))
    if mode == "quantile":
        if not 0.0 <= t <= 1.0:
            raise ValueError("quantile level outside [0, 1]")
        return float(mu.quantile(t))
    raise ValueError(f"unknown mode {mode!r}")


def median_support(mu: Measure1D) -> tuple[float, float, float]:
    """``(median, inf supp, sup supp)`` with the median ``F^{-1}(1/2)``."""
    s, t = mu.support()
    return float(mu.quantile(0.5)), s, t


def is_dirac(mu: Measure1D) -> bool:
    s, t = mu.support()
    return s == t


def exp_moment(mu: Measure1D, s: float) -> float:
    """``int exp(s|x|) dmu``; ``math.inf`` when it diverges."""
    if s <= 0:
        raise ValueError("s must be positive")
    return mu.exp_moment(s)


def discretize(mu: Measure1D, n: int) -> Atoms:
    """Quantile quadrature: atoms at ``F^{-1}((i - 1/2)/n)``, weight ``1/n`` each."""
    if n < 1:
        raise ValueError("n must be at least 1")
    i = np.arange(1, n + 1)
    p = (i - 0.5) / n
    q = (n - i + 0.5) / n
    # the upper half is taken from the upper tail so symmetric laws give
    # exactly symmetric atoms
    lower = p <= 0.5
    x = np.empty(n)
    x[lower] = mu.quantile(p[lower])
    x[~lower] = mu.isf(q[~lower])
    if not np.all(np.isfinite(x)):
        raise ValueError("quantile is infinite at an interior level")
    return Atoms.from_unsorted(x, np.full(n, 1.0 / n))


def tail_integral(mu: Measure1D, x: float, g: Callable, side: str = "upper") -> float:
    """Integral of ``g`` over the open tail ``(x, inf)`` or ``(-inf, x)``."""
    if side == "upper":
        return mu.expect(g, lo=x)
    if side == "lower":
        return mu.expect(g, hi=x)
    raise ValueError(f"unknown side {side!r}")


def scale(mu: Measure1D, lam: float) -> Measure1D:
    return mu.scaled(lam)


def tail_masses(mu: Measure1D, x: float, side: str = "upper") -> float:
    """Open-interval tail mass matching :func:`tail_integral`."""
    return float(mu.sf(x) if side == "upper" else mu.cdf_open(x))


# ---------------------------------------------------------------------------
# measure spec files


def parse_measure(lines: Iterable[str], base_dir=".") -> Measure1D:
    """Build a measure from ``atom``/``gridcdf``/``family`` directives.

    Lines are whitespace separated and ``#`` starts a comment.  Atom sets
    must be normalized to within ``1e-9``.  Directives that do not concern
    measures (``cost ...`` for instance) are ignored so a single file can
    carry a whole run configuration.
    """
    from pathlib import Path

    atoms: list[tuple[float, float]] = []
    found: list[Measure1D] = []
    for raw in lines:
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        head = tok[0]
        if head == "atom":
            if len(tok) != 3:
                raise ValueError(f"malformed atom directive: {raw.strip()!r}")
            atoms.append((float(tok[1]), float(tok[2])))
        elif head == "gridcdf":
            if len(tok) != 2:
                raise ValueError(f"malformed gridcdf directive: {raw.strip()!r}")
            path = Path(base_dir) / tok[1]
            table = np.loadtxt(path, delimiter=None if path.suffix != ".csv" else ",", ndmin=2)
            found.append(GridCdf(table[:, 0], table[:, 1]))
        elif head == "family":
            if len(tok) < 2:
                raise ValueError("family directive needs a tag")
            found.append(family(tok[1], *map(float, tok[2:])))
    if atoms:
        x, w = zip(*atoms)
        total = math.fsum(w)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"atom weights sum to {total!r}, not 1")
        found.append(Atoms.from_unsorted(x, w))
    if len(found) != 1:
        raise ValueError(f"expected exactly one measure, found {len(found)}")
    return found[0]


def load_measure(path) -> Measure1D:
    from pathlib import Path

    path = Path(path)
    return parse_measure(path.read_text().splitlines(), base_dir=path.parent)
