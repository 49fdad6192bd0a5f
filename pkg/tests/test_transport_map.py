import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cvxlsi import costs, measures, transport_map as tm

THETA = costs.quadratic(1.0).theta


@pytest.fixture(scope="module")
def gauss_disc():
    return measures.discretize(measures.family("gaussian", 0.0, 1.0), 10 ** 4)


def test_u_of_tau_is_identity():
    x = np.linspace(-20, 20, 401)
    assert np.allclose(tm.u_mu(tm.tau(), x), x, atol=1e-9)


def test_u_of_two_point_is_step():
    u = tm.u_mu(measures.two_point(), [-3.0, -1e-12, 0.0, 1e-12, 5.0])
    assert list(u) == [0.0, 0.0, 0.0, 1.0, 1.0]


def test_u_of_uniform():
    x = np.array([-2.0, -0.3, 0.0, 0.7, 3.0])
    expect = np.where(x < 0, 0.5 * np.exp(x), 1 - 0.5 * np.exp(-x))
    assert np.allclose(tm.u_mu(measures.family("uniform", 0.0, 1.0), x), expect, atol=1e-12)


def test_pushforward_reproduces_measure():
    mu = measures.Atoms([-1.0, 0.5, 2.0], [0.2, 0.5, 0.3])
    assert tm.pushforward_integral(mu, lambda v: v ** 2) == pytest.approx(0.2 + 0.125 + 1.2, abs=1e-12)
    g = measures.family("gaussian", 0.0, 1.0)
    assert tm.pushforward_integral(g, lambda v: v ** 2) == pytest.approx(1.0, abs=1e-6)


def test_modulus_of_tau_equals_h():
    h = tm.DEFAULT_H_GRID
    assert np.max(np.abs(tm.modulus_curve(tm.tau(), h).delta - h)) <= 1e-10


def test_modulus_two_point_is_one():
    for h in (1e-6, 0.1, 5.0):
        val, wit, exact = tm.delta_mu(measures.two_point(), h)
        assert exact and val == 1.0


@pytest.mark.parametrize("h", [0.01, 0.5, 3.0])
def test_modulus_uniform_closed_form(h):
    val, _, exact = tm.delta_mu(measures.family("uniform", 0.0, 1.0), h)
    assert not exact
    assert val == pytest.approx(1 - math.exp(-h / 2), rel=1e-6)


def test_modulus_rejects_nonpositive_h():
    with pytest.raises(ValueError):
        tm.delta_mu(tm.tau(), 0.0)


def test_criterion_two_point_b_one():
    rep = tm.criterion_check(measures.two_point(), THETA)
    assert rep.passed
    assert rep["b_best"] == pytest.approx(1.0, abs=1e-12)


def test_criterion_tau_fails():
    rep = tm.criterion_check(tm.tau(), THETA)
    assert not rep.passed
    assert rep["ratio_at_hmax"] < 0.15


def test_criterion_gaussian_band(gauss_disc):
    closed = tm.criterion_check(measures.family("gaussian", 0.0, 1.0), THETA)
    assert closed.passed and 0.4 <= closed["b_best"] <= 0.55
    disc = tm.criterion_check(gauss_disc, THETA)
    assert disc.passed and disc["b_best"] >= closed["b_best"]


def test_criterion_uniform_passes():
    rep = tm.criterion_check(measures.family("uniform", 0.0, 1.0), THETA)
    assert rep.passed and rep["b_best"] > 1


def test_criterion_truncated_grid_is_inconclusive():
    # truncated tau: all moments finite, but on h <= 1 the ratio is still falling
    x = np.linspace(-12, 12, 4001)
    F = tm.tau().cdf(x)
    mu = measures.GridCdf(x, (F - F[0]) / (F[-1] - F[0]))
    rep = tm.criterion_check(mu, THETA, h_grid=np.logspace(-3, 0, 60))
    assert rep.verdict == "inconclusive"
    assert rep["tail_decreasing"] and rep["tail_slope"] < -0.25


def test_tail_decay():
    assert tm.tail_decay_check(measures.two_point(), THETA, 1.0).passed
    assert tm.tail_decay_check(measures.family("gaussian", 0.0, 1.0), THETA, 0.5).passed
    assert not tm.tail_decay_check(tm.tau(), THETA, 1.0).passed


def test_criterion_implies_tail_decay(gauss_disc):
    b = tm.criterion_check(gauss_disc, THETA)["b_best"]
    assert tm.tail_decay_check(gauss_disc, THETA, b).passed


def test_orlicz():
    sq = lambda x: x * x
    assert tm.orlicz_condition(measures.two_point(), sq, 1.0, 3.0).passed
    assert not tm.orlicz_condition(tm.tau(), sq, 1.0, 3.0).passed


def test_orlicz_gaussian_small_k(gauss_disc):
    assert tm.orlicz_condition(gauss_disc, lambda x: x * x, 0.2, 3.0).passed


def test_tail_cost_tau_ratio_two():
    rep = tm.tail_cost_bound(tm.tau(), THETA, 1.0)
    assert rep["worst_ratio"] == pytest.approx(2.0, abs=1e-6)
    assert not rep.passed


def test_tail_cost_gaussian(gauss_disc):
    assert tm.tail_cost_bound(gauss_disc, THETA, 0.3).passed


def test_linear_growth():
    assert tm.linear_growth_bound(tm.tau(), 1 / (2 * math.sqrt(2))).passed
    # the jump sits at x = 0, so only the general 4/a form is in reach
    assert tm.linear_growth_bound(measures.two_point(), 4.0)["general_pass"]
    assert not tm.linear_growth_bound(measures.two_point(), 4.5)["general_pass"]
    assert not tm.linear_growth_bound(measures.two_point(), 4.0)["same_sign_pass"]


def test_linear_growth_gaussian(gauss_disc):
    assert tm.linear_growth_bound(gauss_disc, 1 / math.sqrt(2)).passed


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=2, max_size=8, unique=True),
       st.floats(0.01, 3.0), st.floats(0.01, 3.0))
def test_modulus_monotone_and_subadditive(xs, h1, h2):
    mu = measures.Atoms(sorted(xs), np.full(len(xs), 1 / len(xs)))
    d = tm.modulus_curve(mu, [h1, h2, h1 + h2, max(h1, h2)]).delta
    assert d[3] >= min(d[0], d[1]) - 1e-12
    assert d[2] <= d[0] + d[1] + 1e-12
    assert d[3] >= max(d[0], d[1]) - 1e-12


@pytest.mark.parametrize("lam", [0.5, 2.0, 3.0])
def test_criterion_scaling_covariance(lam):
    mu = measures.Atoms([-1.0, 0.0, 2.0], [0.3, 0.4, 0.3])
    b = tm.criterion_check(mu, THETA)["b_best"]
    b_l = tm.criterion_check(mu.scaled(lam), THETA)["b_best"]
    assert b_l == pytest.approx(b / lam, rel=1e-12)


def test_atom_engine_matches_grid():
    mu = measures.Atoms([-1.0, 0.0, 2.0], [0.3, 0.4, 0.3])
    # steep ramps stand in for the atoms
    g = measures.GridCdf([-1, -1 + 1e-9, 0, 1e-9, 2, 2 + 1e-9], [0, 0.3, 0.3, 0.7, 0.7, 1])
    h = np.array([0.05, 0.5, 2.0])
    exact = tm.modulus_curve(mu, h).delta
    assert tm.modulus_curve(mu, h).exact
    approx = tm.modulus_curve(g, h).delta
    assert np.allclose(exact, approx, atol=1e-6)
