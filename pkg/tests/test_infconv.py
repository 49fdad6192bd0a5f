import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cvxlsi import costs, infconv as ic, measures
from cvxlsi.errors import PaddingError

H = costs.quadratic(1.0)
THETA = H.theta  # t^2


def random_convex(rng, n=512, span=5.0):
    nodes = np.linspace(-span, span, n)
    slopes = np.sort(rng.normal(scale=2.0, size=n - 1))
    vals = np.concatenate([[0.0], np.cumsum(slopes * np.diff(nodes))])
    return ic.GridFunction(nodes, vals)


def square():
    return ic.GridFunction.from_callable(lambda x: x * x, np.linspace(-3, 3, 61),
                                         deriv=lambda x: 2 * x, lipschitz=6.0)


def test_q1_of_square():
    x = np.linspace(-1, 1, 41)
    assert np.allclose(ic.q_values(square(), THETA, 1.0, x), x * x / 2, atol=1e-12)


def test_q1_of_positive_part_squared():
    nodes = np.linspace(-3, 3, 6001)
    f = ic.GridFunction(nodes, np.maximum(nodes, 0) ** 2)
    x = np.linspace(-1, 1, 21)
    q = ic.q_values(f, THETA, 1.0, x, engine="exhaustive")
    assert np.allclose(q, np.where(x > 0, x * x / 2, 0.0), atol=1e-6)


@pytest.mark.parametrize("s,t", [(1.0, 1.0), (-0.5, 2.0), (2.0, 0.3)])
def test_linear_completes_the_square(s, t):
    x = np.linspace(-1, 1, 11)
    expect = s * x - t * s * s / 4
    f = ic.GridFunction.piecewise_linear([], [s], value_at_first=-10 * s, span=10.0)
    assert np.allclose(ic.q_values(f, THETA, t, x, engine="exact"), expect, atol=1e-12)
    # node-restricted engines on a 1e-3 grid: error at most (dx/2)^2 / t
    nodes = np.linspace(-10, 10, 20001)
    g = ic.GridFunction(nodes, s * nodes)
    for engine in ("envelope", "exhaustive"):
        q = ic.q_values(g, THETA, t, x, engine=engine)
        assert np.all(q >= expect - 1e-12)
        assert np.allclose(q, expect, atol=0.25e-6 / t + 1e-12)


def test_engines_agree_on_random_convex():
    rng = np.random.default_rng(1)
    for _ in range(20):
        f = random_convex(rng)
        x = np.linspace(-3, 3, 301)
        a = ic.q_values(f, THETA, 1.0, x, engine="exhaustive")
        b = ic.q_values(f, THETA, 1.0, x, engine="envelope")
        c = ic.q_values(f, THETA, 1.0, x, engine="exact")
        assert np.max(np.abs(a - b)) <= 1e-9
        # the exact engine minimizes over the whole interpolant, not just nodes
        assert np.all(c <= b + 1e-12)
        assert np.max(b - c) <= 1e-3


def test_padding_error():
    # a steep linear function pushes the minimizer past the left edge
    f = ic.GridFunction(np.array([-1.0, 1.0]), np.array([-10.0, 10.0]))
    with pytest.raises(PaddingError):
        ic.inf_convolution(f, THETA, 1.0, np.linspace(-1, 1, 5), engine="envelope")


def test_inf_convolution_output_and_constant():
    f = ic.GridFunction.constant(2.5, span=4.0)
    q = ic.inf_convolution(f, THETA, 0.7, np.linspace(-2, 2, 9))
    assert np.allclose(q.values, 2.5)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6), st.floats(0.1, 2.0), st.floats(0.1, 2.0))
def test_contractive_monotone_convex(seed, t1, t2):
    f = random_convex(np.random.default_rng(seed), n=64)
    x = np.linspace(-2, 2, 81)
    lo, hi = sorted((t1, t2))
    q_lo = ic.q_values(f, THETA, lo, x)
    q_hi = ic.q_values(f, THETA, hi, x)
    assert np.all(q_lo <= f(x) + 1e-12)
    assert np.all(q_hi <= q_lo + 1e-12)
    s = np.diff(q_lo) / np.diff(x)
    assert np.all(np.diff(s) >= -1e-8)


@pytest.mark.parametrize("c", [0.3, -1.25])
def test_translation_equivariance(c):
    f = random_convex(np.random.default_rng(7), n=128)
    g = ic.GridFunction(f.nodes + c, f.values)
    x = np.linspace(-2, 2, 41)
    assert np.allclose(ic.q_values(g, THETA, 1.0, x), ic.q_values(f, THETA, 1.0, x - c), atol=1e-10)


def test_r_lambda_abs():
    f = ic.GridFunction.piecewise_linear([0.0], [-1.0, 1.0], value_at_first=0.0, span=10.0)
    x = np.linspace(-4, 4, 81)
    vals, rep = ic.r_lambda(f, THETA, 1.0, 0.5, x, check_gap=True)
    expect = np.where(np.abs(x) >= 1, np.abs(x) - 0.5, x * x / 2)
    assert np.allclose(vals, expect, atol=1e-10)
    assert rep.passed
    assert rep["max_gap"] == pytest.approx(0.5, abs=1e-10)


def test_r_lambda_constant_and_identity():
    f = ic.GridFunction.constant(1.0, span=5.0)
    assert np.allclose(ic.r_lambda(f, THETA, 2.0, 0.3, [0.0, 1.0]), 1.0)
    g = random_convex(np.random.default_rng(3), n=64)
    x = np.linspace(-1, 1, 11)
    via_q = ic.q_values(g, costs.transform(THETA, 0.3, 2.0), 1.0, x, engine="exact")
    assert np.allclose(ic.r_lambda(g, THETA, 2.0, 0.3, x), via_q)


def test_r_lambda_rejects():
    f = ic.GridFunction(np.array([-1.0, 0.0, 1.0]), np.array([0.0, 1.0, 0.0]))
    with pytest.raises(ValueError):
        ic.r_lambda(f, THETA, 1.0, 0.5, [0.0])
    with pytest.raises(ValueError):
        ic.r_lambda(ic.GridFunction.constant(0.0), THETA, 1.0, 1.5, [0.0])


def test_hopf_lax_square():
    t = np.arange(0.1, 1.0 + 1e-9, 0.05)
    x = np.linspace(-1, 1, 2001)
    rep = ic.hopf_lax_residual(square(), H, t, x, dt=1e-3, dx=1e-3)
    assert rep["max_abs_residual"] <= 1e-6


def test_hopf_lax_linear():
    f = ic.GridFunction.piecewise_linear([], [0.7], value_at_first=-7.0, span=10.0)
    rep = ic.hopf_lax_residual(f, H, [0.5, 1.0], np.linspace(-1, 1, 21), dt=1e-3, dx=1e-3)
    assert rep["max_abs_residual"] <= 1e-9


def test_hopf_lax_first_order_refinement():
    f = ic.GridFunction.piecewise_linear([-0.5, 0.2, 0.9], [-1.5, -0.2, 0.6, 2.0], span=5.0)
    t = [0.5, 1.0]
    x = np.linspace(-1, 1, 41)
    res = [ic.hopf_lax_residual(f, H, t, x, dt=d, dx=d, exclude=0.05)["max_abs_residual"]
           for d in (4e-3, 2e-3, 1e-3)]
    assert res[2] < res[1] < res[0]
    assert res[0] / res[2] >= 3.0


def test_hopf_lax_coarse_grid():
    with pytest.raises(ValueError):
        ic.hopf_lax_residual(square(), H, [1.0], [0.0])


def test_maurey_k():
    assert ic.maurey_k(0.0) == 0.0
    assert np.all(ic.maurey_k([0.5, 1.0, 7.0]) == 0.25)
    gap, _ = ic.maurey_envelope_gap(np.linspace(0, 5, 10 ** 4))
    assert gap <= 0


def test_maurey_bound_check():
    mu = measures.family("uniform", 0.0, 1.0)
    f = random_convex(np.random.default_rng(5), n=64)
    assert ic.maurey_bound_check(f, 1.0, mu).passed
    atoms = measures.Atoms([0.0, 0.4, 1.5], [0.2, 0.5, 0.3])
    assert ic.maurey_bound_check(f, 1.5, atoms).passed
    with pytest.raises(ValueError):
        ic.maurey_bound_check(f, 1.0, atoms)
